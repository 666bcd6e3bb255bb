#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cobbkit/cacm.hpp"
#include "cobbkit/error.hpp"
#include "cobbkit/landmarks.hpp"
#include "cobbkit/metrics.hpp"
#include "cobbkit/rng.hpp"
#include "cobbkit/selfcheck.hpp"
#include "cobbkit/svg.hpp"
#include "cobbkit/synth.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;
constexpr int kExitCheckFailed = 3;

cobbkit::LandmarkFormat format_from_name(const std::string& name) {
    return name == "json" ? cobbkit::LandmarkFormat::Json : cobbkit::LandmarkFormat::Csv;
}

std::vector<cobbkit::SpineLandmarks> load_input(const std::string& path,
                                                const std::string& format) {
    if (format.empty()) return cobbkit::load_landmarks_file(path);
    return cobbkit::load_landmarks_file(path, format_from_name(format));
}

std::string safe_filename(const std::string& id) {
    std::string out = id;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_')
            c = '_';
    return out;
}

struct AnglesConfig {
    std::string input;
    std::string format;
    std::string method = "cacm";
    double epsilon = cobbkit::kDefaultEpsilonRad;
    std::string plot_dir;
    unsigned workers = 1;
    bool sorted = false;
};

int cmd_angles(const AnglesConfig& cfg) {
    std::vector<cobbkit::SpineLandmarks> images;
    try {
        images = load_input(cfg.input, cfg.format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (!cfg.plot_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(cfg.plot_dir, ec);
        if (ec) {
            std::cerr << "error: cannot create plot directory '" << cfg.plot_dir << "'\n";
            return kExitUsage;
        }
    }

    struct Item {
        std::string image_id;
        std::string lines;  // one or two JSON lines
        std::string error;
    };
    std::vector<Item> items(images.size());
    std::atomic<std::size_t> next{0};
    std::mutex io_mutex;

    auto process = [&](std::size_t i) {
        const cobbkit::SpineLandmarks& sl = images[i];
        Item& item = items[i];
        item.image_id = sl.image_id;
        try {
            for (const std::string& warning : cobbkit::validate(sl)) {
                std::lock_guard<std::mutex> lock(io_mutex);
                std::cerr << "warning: " << sl.image_id << ": " << warning << "\n";
            }
            std::vector<cobbkit::CobbReport> reports;
            if (cfg.method == "cacm" || cfg.method == "both")
                reports.push_back(cobbkit::cacm_pipeline(sl, cfg.epsilon));
            if (cfg.method == "cam" || cfg.method == "both")
                reports.push_back(cobbkit::cam_baseline(sl));
            for (const cobbkit::CobbReport& r : reports) {
                item.lines += cobbkit::report_json(r);
                item.lines += '\n';
                if (!cfg.plot_dir.empty()) {
                    const std::string path = cfg.plot_dir + "/" + safe_filename(sl.image_id) +
                                             "." + cobbkit::to_string(r.method) + ".svg";
                    std::ofstream out(path, std::ios::binary);
                    out << cobbkit::render_svg(r, sl);
                    if (!out) throw cobbkit::Error("cannot write '" + path + "'");
                }
            }
        } catch (const std::exception& e) {
            item.error = e.what();
        }
        if (!cfg.sorted) {
            // stream as completed; line order varies with the worker count
            std::lock_guard<std::mutex> lock(io_mutex);
            if (item.error.empty())
                std::cout << item.lines;
            else
                std::cerr << "error: " << item.image_id << ": " << item.error << "\n";
        }
    };
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1))
            process(i);
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < cfg.workers; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    bool failed = false;
    if (cfg.sorted) {
        std::vector<const Item*> order;
        order.reserve(items.size());
        for (const Item& it : items) order.push_back(&it);
        std::sort(order.begin(), order.end(), [](const Item* a, const Item* b) {
            return a->image_id < b->image_id;
        });
        for (const Item* it : order) {
            if (it->error.empty()) {
                std::cout << it->lines;
            } else {
                std::cerr << "error: " << it->image_id << ": " << it->error << "\n";
                failed = true;
            }
        }
    } else {
        for (const Item& it : items) failed = failed || !it.error.empty();
    }
    std::cout.flush();
    return failed ? kExitPartial : kExitOk;
}

struct EvalConfig {
    std::string input;
    std::string gt;
    std::string format;
    std::string method = "cacm";
    double epsilon = cobbkit::kDefaultEpsilonRad;
};

int cmd_eval(const EvalConfig& cfg) {
    try {
        const auto preds = load_input(cfg.input, cfg.format);
        const auto gts = load_input(cfg.gt, cfg.format);
        const auto pairs = cobbkit::pair_by_image_id(preds, gts);

        std::vector<cobbkit::AnglePair> angles;
        angles.reserve(pairs.size());
        for (const auto& pr : pairs) {
            cobbkit::AnglePair ap;
            if (cfg.method == "cacm") {
                ap.pred = cobbkit::cacm_pipeline(pr.pred, cfg.epsilon).angles_deg;
                ap.gt = cobbkit::cacm_pipeline(pr.gt, cfg.epsilon).angles_deg;
            } else {
                ap.pred = cobbkit::cam_baseline(pr.pred).angles_deg;
                ap.gt = cobbkit::cam_baseline(pr.gt).angles_deg;
            }
            angles.push_back(ap);
        }

        const double mse = cobbkit::landmark_mse_mm2(pairs);
        const cobbkit::SmapeResult smape = cobbkit::smape_percent(angles);
        const cobbkit::AngleErrorStats st = cobbkit::angle_errors(angles);

        ordered_json j;
        j["mse"] = mse;
        ordered_json sdr;
        for (int delta = 1; delta <= 4; ++delta)
            sdr[std::to_string(delta)] = cobbkit::sdr_percent(pairs, delta);
        j["sdr"] = sdr;
        j["smape"] = smape.percent;
        j["cmae"] = st.cmae_deg;
        j["ed"] = st.ed_deg;
        j["md"] = st.md_deg;
        j["cd"] = st.cd_deg;
        j["n_images"] = pairs.size();
        j["skipped"] = smape.skipped;
        std::cout << j.dump() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

struct SynthConfig {
    std::string output;
    std::string format;
    int count = 100;
    std::uint64_t seed = 0;
    double jitter = 0.0;
};

int cmd_synth(const SynthConfig& cfg) {
    try {
        cobbkit::LandmarkFormat fmt;
        if (!cfg.format.empty())
            fmt = format_from_name(cfg.format);
        else if (cfg.output.size() >= 5 && cfg.output.substr(cfg.output.size() - 5) == ".json")
            fmt = cobbkit::LandmarkFormat::Json;
        else
            fmt = cobbkit::LandmarkFormat::Csv;

        cobbkit::SeededRng rng(cfg.seed);
        std::vector<cobbkit::SpineLandmarks> images;
        ordered_json truth = ordered_json::array();
        for (int i = 0; i < cfg.count; ++i) {
            cobbkit::SpineSpec spec;
            for (double& t : spec.tilt_profile_deg) t = rng.uniform(-25.0, 25.0);
            spec.jitter_px = cfg.jitter;
            spec.seed = rng.next_u64();
            char id[32];
            std::snprintf(id, sizeof(id), "synthetic-%04d", i);
            const cobbkit::GeneratedSpine gen = cobbkit::generate_spine(spec, id);
            images.push_back(gen.landmarks);

            ordered_json entry;
            entry["image_id"] = id;
            ordered_json tilts = ordered_json::array();
            for (double t : gen.ground_truth.vertebral_rad) tilts.push_back(t * cobbkit::kDegPerRad);
            entry["tilt_deg"] = tilts;
            entry["oracle"] = ordered_json::parse(
                cobbkit::report_json(cobbkit::oracle_cobb(id, gen.ground_truth.vertebral_rad)));
            truth.push_back(entry);
        }

        std::ofstream out(cfg.output, std::ios::binary);
        if (!out) throw cobbkit::Error("cannot write '" + cfg.output + "'");
        out << cobbkit::serialize_landmarks(images, fmt);
        if (!out) throw cobbkit::Error("short write to '" + cfg.output + "'");

        const std::string truth_path = cfg.output + ".truth.json";
        std::ofstream tout(truth_path, std::ios::binary);
        if (!tout) throw cobbkit::Error("cannot write '" + truth_path + "'");
        tout << truth.dump() << "\n";
        if (!tout) throw cobbkit::Error("short write to '" + truth_path + "'");
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

ordered_json check_json(const std::vector<cobbkit::CheckResult>& checks) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : checks) {
        ordered_json j;
        j["name"] = c.name;
        j["passed"] = c.passed;
        j["detail"] = c.detail;
        arr.push_back(j);
    }
    return arr;
}

int print_check_summary(std::uint64_t seed, const std::vector<cobbkit::CheckResult>& checks) {
    ordered_json j;
    j["seed"] = seed;
    bool all = true;
    ordered_json failed = ordered_json::array();
    for (const auto& c : checks)
        if (!c.passed) {
            all = false;
            failed.push_back(c.name);
        }
    j["passed"] = all;
    j["failed"] = failed;
    j["checks"] = check_json(checks);
    std::cout << j.dump() << "\n";
    return all ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cobb angle toolkit: landmark files in, angle reports and metrics out"};
    app.require_subcommand(1);

    AnglesConfig angles;
    CLI::App* cmd_a = app.add_subcommand("angles", "Per-image Cobb angle reports as JSON lines");
    cmd_a->add_option("--input", angles.input, "Landmark file (.csv or .json)")->required();
    cmd_a->add_option("--format", angles.format, "Override format detection")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd_a->add_option("--method", angles.method, "Angle method")
        ->check(CLI::IsMember({"cacm", "cam", "both"}));
    cmd_a->add_option("--epsilon", angles.epsilon, "Inflection epsilon band, radians")
        ->check(CLI::NonNegativeNumber);
    cmd_a->add_option("--plot", angles.plot_dir, "Write an SVG per image into this directory");
    cmd_a->add_option("--workers", angles.workers, "Worker threads")
        ->check(CLI::PositiveNumber);
    cmd_a->add_flag("--sorted", angles.sorted, "Buffer and emit lines sorted by image_id");

    EvalConfig eval;
    CLI::App* cmd_e = app.add_subcommand("eval", "Aggregate metrics for predictions vs ground truth");
    cmd_e->add_option("--input", eval.input, "Predicted landmark file")->required();
    cmd_e->add_option("--gt", eval.gt, "Ground-truth landmark file")->required();
    cmd_e->add_option("--format", eval.format, "Override format detection")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd_e->add_option("--method", eval.method, "Angle method for the angle metrics")
        ->check(CLI::IsMember({"cacm", "cam"}));
    cmd_e->add_option("--epsilon", eval.epsilon, "Inflection epsilon band, radians")
        ->check(CLI::NonNegativeNumber);

    SynthConfig synth;
    CLI::App* cmd_s = app.add_subcommand("synth", "Generate synthetic spines with a truth sidecar");
    cmd_s->add_option("--output", synth.output, "Landmark file to write")->required();
    cmd_s->add_option("--format", synth.format, "Override format detection")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd_s->add_option("--count", synth.count, "Number of spines")->check(CLI::PositiveNumber);
    cmd_s->add_option("--seed", synth.seed, "Generator seed");
    cmd_s->add_option("--jitter", synth.jitter, "Uniform corner jitter, pixels")
        ->check(CLI::NonNegativeNumber);

    std::uint64_t sc_seed = 0;
    CLI::App* cmd_sc = app.add_subcommand("selfcheck", "Run every invariant suite");
    cmd_sc->add_option("--seed", sc_seed, "Suite seed");

    std::uint64_t fc_seed = 0;
    CLI::App* cmd_fc = app.add_subcommand("frem-check", "Attention and residual invariants");
    cmd_fc->add_option("--seed", fc_seed, "Suite seed");

    std::uint64_t lc_seed = 0;
    cobbkit::LossConfig lc_cfg;
    CLI::App* cmd_lc = app.add_subcommand("loss-check", "Finite-difference gradient validation");
    cmd_lc->add_option("--seed", lc_seed, "Suite seed");
    cmd_lc->add_option("--alpha", lc_cfg.alpha, "Heatmap term weight")
        ->check(CLI::NonNegativeNumber);
    cmd_lc->add_option("--beta", lc_cfg.beta, "Foreground emphasis")
        ->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (cmd_a->parsed()) return cmd_angles(angles);
        if (cmd_e->parsed()) return cmd_eval(eval);
        if (cmd_s->parsed()) return cmd_synth(synth);
        if (cmd_sc->parsed()) return print_check_summary(sc_seed, cobbkit::run_selfcheck(sc_seed));
        if (cmd_fc->parsed())
            return print_check_summary(fc_seed, cobbkit::run_frem_checks(fc_seed));
        if (cmd_lc->parsed()) {
            const cobbkit::LossCheckSummary s = cobbkit::run_loss_checks(lc_seed, lc_cfg);
            ordered_json j;
            j["max_rel_err"] = s.max_rel_err;
            j["mean_rel_err"] = s.mean_rel_err;
            j["n_coords"] = s.n_coords;
            j["seed"] = s.seed;
            std::cout << j.dump() << "\n";
            return s.passed ? kExitOk : kExitCheckFailed;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
