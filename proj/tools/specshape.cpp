// specshape: command-line front end.
//
// Exit codes: 0 ok, 2 I/O (missing/unreadable/malformed input files,
// calibration references), 3 rule parse/bind, 4 configuration.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <specshape/service.hpp>
#include <specshape/specshape.hpp>

namespace fs = std::filesystem;
using namespace specshape;

namespace {

constexpr int kExitIo = 2;
constexpr int kExitRules = 3;
constexpr int kExitConfig = 4;

struct PipelineFlags {
    PipelineConfig cfg;
    std::string continuum_mode = "ratio";

    void add(CLI::App& app) {
        app.add_option("--threshold", cfg.threshold, "Curvature significance threshold")->capture_default_str();
        app.add_option("--continuum-mode", continuum_mode, "ratio | difference")->capture_default_str();
        app.add_option("--smooth-window", cfg.smooth_window, "Savitzky-Golay window (odd)")->capture_default_str();
        app.add_option("--smooth-order", cfg.smooth_order, "Savitzky-Golay polynomial order")->capture_default_str();
        app.add_option("--bind-tolerance-nm", cfg.bind_tolerance_nm, "Max distance rule wavelength -> band")
            ->capture_default_str();
        app.add_option("--x-scale", cfg.x_scale, "Curvature x spacing per band")->capture_default_str();
        app.add_option("--threads", cfg.threads, "Worker threads (0 = all, capped by SPECSHAPE_THREADS)")
            ->capture_default_str();
    }

    PipelineConfig resolve() {
        cfg.continuum_mode = parse_continuum_mode(continuum_mode);
        return cfg;
    }
};

/// Inputs and outputs of a classification run.
struct JobSpec {
    std::string cube, raw, dark, white;
    std::string rules = "builtin";
    std::string out, truth, metrics;
    bool strict = false;

    void validate() const {
        const bool pre = !cube.empty();
        const bool triple = !raw.empty() || !dark.empty() || !white.empty();
        if (pre == triple) throw ConfigError("give either --cube or all of --raw/--dark/--white");
        for (const auto* p : {&cube, &raw, &dark, &white, &truth})
            if (!p->empty() && !fs::exists(*p)) throw IoError("input not found: " + *p);
        if (triple && (raw.empty() || dark.empty() || white.empty()))
            throw ConfigError("--raw, --dark and --white must be given together");
        if (rules != "builtin" && !fs::exists(rules)) throw IoError("rule file not found: " + rules);
        for (const auto* p : {&out, &metrics}) {
            if (p->empty()) continue;
            const auto dir = fs::absolute(*p).parent_path();
            if (!fs::is_directory(dir)) throw IoError("output directory does not exist: " + dir.string());
        }
    }
};

SpectralCube load_cube(const std::string& cube, const std::string& raw, const std::string& dark,
                       const std::string& white) {
    std::vector<std::string> warnings;
    if (!cube.empty()) {
        auto c = envi::read_envi(cube, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << cube << ": " << w << "\n";
        return c;
    }
    for (const auto* p : {&raw, &dark, &white})
        if (!fs::exists(*p)) throw IoError("input not found: " + *p);
    auto r = envi::read_envi(raw, &warnings);
    auto d = envi::read_envi(dark, &warnings);
    auto w = envi::read_envi(white, &warnings);
    for (const auto& msg : warnings) std::cerr << "warning: " << msg << "\n";
    return calibrate(r, d, w);
}

rules::RuleSet load_rules(const std::string& path) {
    if (path == "builtin") return rules::builtin_rules();
    return rules::parse_rules(envi::read_text_file(path));
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed on " + path);
}

void print_diagnostics(const rules::RuleError& e, const std::string& file) {
    for (const auto& d : e.diagnostics()) std::cerr << file << ":" << d.to_string() << "\n";
}

int cmd_calibrate(const std::string& raw, const std::string& dark, const std::string& white, const std::string& out) {
    const auto cube = load_cube({}, raw, dark, white);
    envi::write_envi(cube, out, Interleave::bsq, envi::DataType::float32);
    std::cout << "wrote " << out << " (" << cube.rows() << "x" << cube.cols() << "x" << cube.bands() << ", "
              << cube.pixel_count() - cube.valid_count() << " invalid pixels)\n";
    return 0;
}

int cmd_classify(const JobSpec& job, PipelineFlags& flags) {
    job.validate();
    const auto cfg = flags.resolve();
    const auto cube = load_cube(job.cube, job.raw, job.dark, job.white);
    const auto rs = load_rules(job.rules);
    const auto crs = rules::bind(rs, cube.wavelengths(), cfg.bind_options());

    const auto t0 = std::chrono::steady_clock::now();
    const auto map = classify_cube(cube, crs, cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_label_map(map, job.out);

    std::printf("classified %zux%zu pixels, %zu bands, %zu rules in %.3f s (%zu threads)\n", cube.rows(), cube.cols(),
                cube.bands(), crs.rules.size(), seconds, resolve_thread_count(cfg.threads));
    for (const auto& [id, n] : map.counts()) {
        const auto it = map.class_table.find(id);
        std::printf("  %3u %-12s %zu\n", unsigned(id), it == map.class_table.end() ? "unclassified" : it->second.name.c_str(),
                    n);
    }
    if (!job.truth.empty()) {
        const auto truth = read_label_map(job.truth, map.rows, map.cols);
        const auto m = evaluate_metrics(map, truth, !job.strict);
        std::cout << "\n" << format_metrics_text(m);
        if (!job.metrics.empty()) write_text(job.metrics, format_metrics_csv(m));
    }
    return 0;
}

int cmd_plot(const std::string& cube_path, std::size_t x, std::size_t y, const std::string& out, PipelineFlags& flags) {
    const auto cfg = flags.resolve();
    const auto cube = envi::read_envi(cube_path);
    if (x >= cube.cols() || y >= cube.rows())
        throw ConfigError("pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") is outside the cube");
    const auto a = analyze_spectrum(pixel_spectrum(cube, y, x), cfg);
    write_text(out, render_pixel_svg(a));
    std::cout << "wrote " << out << " (" << a.features.points.size() << " feature points, "
              << a.features.significant_count() << " significant)\n";
    return 0;
}

int cmd_features(const std::string& cube_path, std::size_t x, std::size_t y, const std::string& out,
                 PipelineFlags& flags) {
    const auto cfg = flags.resolve();
    const auto cube = envi::read_envi(cube_path);
    if (x >= cube.cols() || y >= cube.rows())
        throw ConfigError("pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") is outside the cube");
    const auto a = analyze_spectrum(pixel_spectrum(cube, y, x), cfg);
    const auto csv = format_feature_csv(a.features);
    if (out.empty()) std::cout << csv;
    else write_text(out, csv);
    return 0;
}

int cmd_serve(const std::string& cube_path, const std::string& rules_path, int port, std::size_t downsample,
              const std::string& host, const std::string& ui_dir, PipelineFlags& flags) {
    const auto cfg = flags.resolve();
    auto cube = envi::read_envi(cube_path);
    std::optional<rules::RuleSet> rs;
    if (!rules_path.empty()) rs = load_rules(rules_path);
    service::Workbench bench(std::move(cube), cfg, rs);
    bench.default_downsample = downsample;
    httplib::Server server;
    bench.install(server);
    if (!ui_dir.empty() && !server.set_mount_point("/", ui_dir)) throw IoError("cannot serve UI directory " + ui_dir);
    std::cout << "serving " << cube_path << " on http://" << host << ":" << port << "\n" << std::flush;
    if (!server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
    return 0;
}

int cmd_synth(const std::string& dir, std::size_t rows, std::size_t cols, std::uint64_t seed) {
    fs::create_directories(dir);
    synthetic::SceneSpec spec;
    spec.rows = rows;
    spec.cols = cols;
    spec.seed = seed;
    const auto scene = synthetic::make_scene(spec);
    envi::write_envi(scene.cube, fs::path(dir) / "cube.hdr");
    write_label_map(scene.truth, fs::path(dir) / "truth.png");

    // Draft rules from the noise-free class spectra.
    PipelineConfig cfg;
    rules::RuleSet rs;
    for (std::size_t k = 0; k < scene.prototypes.size(); ++k) {
        const auto a = analyze_spectrum(scene.prototypes[k], cfg);
        rs.rules.push_back(rules::suggest_rule(scene.spec.classes[k].name, a.features, {0.05, 0.1, 0}));
    }
    write_text((fs::path(dir) / "synthetic.rules").string(),
               "# Drafted from the noise-free class spectra (select |kappa| >= 0.1, condition at 0.05).\n" +
                   rules::print_rules(rs));
    SpectralLibrary lib{std::vector<double>(scene.cube.wavelengths().begin(), scene.cube.wavelengths().end()), {}};
    for (std::size_t k = 0; k < scene.prototypes.size(); ++k)
        lib.spectra.push_back({scene.spec.classes[k].name, scene.prototypes[k].values});
    write_spectral_library(lib, fs::path(dir) / "library.csv");
    std::cout << "wrote " << dir << "/{cube.hdr,cube.raw,truth.png,truth.classes.tsv,synthetic.rules,library.csv}\n";
    return 0;
}

int cmd_rules(const std::string& path, bool print) {
    const auto text = path == "builtin" ? std::string(rules::kBuiltinRulesText) : envi::read_text_file(path);
    const auto rs = rules::parse_rules(text);
    if (print) {
        std::cout << rules::print_rules(rs);
        return 0;
    }
    for (const auto& r : rs.rules) std::cout << r.class_name << ": " << r.expr.atom_count() << " conditions\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shape-rule classification of hyperspectral cubes"};
    app.require_subcommand(1);

    std::string raw, dark, white, out, cube, rules_path, ui_dir, host = "127.0.0.1";
    std::size_t x = 0, y = 0, downsample = 4, rows = 661, cols = 500;
    std::uint64_t seed = 20211;
    int port = 8080;
    bool print = false;
    JobSpec job;

    auto* cal = app.add_subcommand("calibrate", "Dark/white radiometric calibration to reflectance");
    cal->add_option("--raw", raw, "Raw cube header")->required();
    cal->add_option("--dark", dark, "Dark reference header")->required();
    cal->add_option("--white", white, "White reference header")->required();
    cal->add_option("--out", out, "Output header (ENVI float32)")->required();

    PipelineFlags classify_flags;
    auto* cls = app.add_subcommand("classify", "Classify every pixel of a cube");
    cls->add_option("--cube", job.cube, "Calibrated cube header");
    cls->add_option("--raw", job.raw, "Raw cube header (calibrate on the fly)");
    cls->add_option("--dark", job.dark, "Dark reference header");
    cls->add_option("--white", job.white, "White reference header");
    cls->add_option("--rules", job.rules, "Rule file, or 'builtin'")->capture_default_str();
    cls->add_option("--out", job.out, "Label map PNG")->required();
    cls->add_option("--truth", job.truth, "Ground-truth label map PNG");
    cls->add_option("--metrics", job.metrics, "Metrics CSV output (needs --truth)");
    cls->add_flag("--strict", job.strict, "Count truth-0 pixels as a class when scoring");
    classify_flags.add(*cls);

    PipelineFlags plot_flags;
    auto* plot = app.add_subcommand("plot", "SVG of one pixel's continuum-removed spectrum and curvature");
    plot->add_option("--cube", cube, "Calibrated cube header")->required();
    plot->add_option("--x", x, "Column")->required();
    plot->add_option("--y", y, "Row")->required();
    plot->add_option("--out", out, "SVG path")->required();
    plot_flags.add(*plot);

    PipelineFlags feature_flags;
    auto* feat = app.add_subcommand("features", "Dump one pixel's feature points as CSV");
    feat->add_option("--cube", cube, "Calibrated cube header")->required();
    feat->add_option("--x", x, "Column")->required();
    feat->add_option("--y", y, "Row")->required();
    feat->add_option("--out", out, "CSV path (stdout when omitted)");
    feature_flags.add(*feat);

    PipelineFlags serve_flags;
    auto* srv = app.add_subcommand("serve", "Run the workbench HTTP API");
    srv->add_option("--cube", cube, "Calibrated cube header")->required();
    srv->add_option("--rules", rules_path, "Rule file or 'builtin' (listed by /api/meta)");
    srv->add_option("--port", port, "TCP port")->capture_default_str();
    srv->add_option("--host", host, "Bind address")->capture_default_str();
    srv->add_option("--downsample", downsample, "Default preview stride")->capture_default_str();
    srv->add_option("--ui-dir", ui_dir, "Static files to serve at /");
    serve_flags.add(*srv);

    auto* syn = app.add_subcommand("synth", "Write a synthetic scene with ground truth and drafted rules");
    syn->add_option("--out-dir", out, "Output directory")->required();
    syn->add_option("--rows", rows, "Rows")->capture_default_str();
    syn->add_option("--cols", cols, "Columns")->capture_default_str();
    syn->add_option("--seed", seed, "RNG seed")->capture_default_str();

    auto* rl = app.add_subcommand("rules", "Check a rule file (or 'builtin') and summarise it");
    rl->add_option("file", rules_path, "Rule file or 'builtin'")->required();
    rl->add_flag("--print", print, "Print the normalised rules");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*cal) return cmd_calibrate(raw, dark, white, out);
        if (*cls) return cmd_classify(job, classify_flags);
        if (*plot) return cmd_plot(cube, x, y, out, plot_flags);
        if (*feat) return cmd_features(cube, x, y, out, feature_flags);
        if (*srv) return cmd_serve(cube, rules_path, port, downsample, host, ui_dir, serve_flags);
        if (*syn) return cmd_synth(out, rows, cols, seed);
        if (*rl) return cmd_rules(rules_path, print);
    } catch (const rules::RuleError& e) {
        print_diagnostics(e, job.rules.empty() ? rules_path : (*cls ? job.rules : rules_path));
        return kExitRules;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const CalibrationError& e) {
        std::cerr << "calibration error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
