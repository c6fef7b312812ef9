#pragma once

// Per-pixel classification: smooth -> continuum removal -> curvature ->
// rules. Stages are fused per pixel; each worker owns its scratch buffers so
// memory is O(pixels + bands * workers).

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "cube.hpp"
#include "error.hpp"
#include "label_map.hpp"
#include "preprocess.hpp"
#include "rule_engine.hpp"
#include "shape_features.hpp"

namespace specshape {

struct PipelineConfig {
    std::size_t smooth_window = 7;
    std::size_t smooth_order = 2;
    ContinuumMode continuum_mode = ContinuumMode::ratio;
    double threshold = 0.1;
    double bind_tolerance_nm = 10.0;
    double x_scale = 1.0;
    /// 0 = hardware concurrency, capped by SPECSHAPE_THREADS when set.
    std::size_t threads = 0;

    void validate(std::size_t bands) const {
        if (smooth_window % 2 == 0 || smooth_window < 3)
            throw ConfigError("smoothing window must be odd and >= 3, got " + std::to_string(smooth_window));
        if (smooth_window > bands)
            throw ConfigError("smoothing window " + std::to_string(smooth_window) + " exceeds band count " +
                              std::to_string(bands));
        if (smooth_order >= smooth_window) throw ConfigError("smoothing order must be below the window size");
        if (!(threshold > 0.0)) throw ConfigError("curvature threshold must be positive");
        if (!(bind_tolerance_nm > 0.0)) throw ConfigError("binding tolerance must be positive");
        if (!(x_scale > 0.0)) throw ConfigError("x-scale must be positive");
        if (bands < 3) throw ConfigError("at least 3 bands are needed for shape analysis");
    }

    rules::BindOptions bind_options() const { return {bind_tolerance_nm, continuum_mode, x_scale}; }
};

/// Worker count: explicit request, else hardware concurrency, both capped by
/// the SPECSHAPE_THREADS environment variable.
inline std::size_t resolve_thread_count(std::size_t requested) {
    std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SPECSHAPE_THREADS")) {
        char* end = nullptr;
        const unsigned long cap = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && cap > 0) n = std::min<std::size_t>(n, cap);
    }
    return std::max<std::size_t>(1, n);
}

/// Everything computed for one pixel, for inspection and plotting.
struct PixelAnalysis {
    Spectrum raw;
    Spectrum smoothed;
    Continuum continuum;
    Spectrum continuum_removed;
    FeatureSet features;
    bool valid = true;
};

inline PixelAnalysis analyze_spectrum(const Spectrum& raw, const PipelineConfig& cfg) {
    cfg.validate(raw.size());
    PixelAnalysis a;
    a.raw = raw;
    a.smoothed = smooth(raw, cfg.smooth_window, cfg.smooth_order);
    auto cr = continuum_remove(a.smoothed, cfg.continuum_mode);
    a.continuum = std::move(cr.continuum);
    a.continuum_removed = std::move(cr.spectrum);
    a.valid = cr.valid;
    a.features = detect_feature_points(a.continuum_removed, cfg.threshold, cfg.x_scale);
    return a;
}

inline Spectrum pixel_spectrum(const SpectralCube& cube, std::size_t row, std::size_t col) {
    Spectrum s{std::vector<double>(cube.wavelengths().begin(), cube.wavelengths().end()),
               std::vector<double>(cube.bands()), SpectrumKind::raw};
    cube.read_pixel(row, col, s.values);
    return s;
}

/// Cube-like inputs for classify_cube: SpectralCube satisfies it, and tests
/// can wrap it to count pixel reads.
template <class C>
concept CubeSource = requires(const C& c, std::size_t r, std::span<double> out) {
    { c.rows() } -> std::convertible_to<std::size_t>;
    { c.cols() } -> std::convertible_to<std::size_t>;
    { c.bands() } -> std::convertible_to<std::size_t>;
    { c.wavelengths() } -> std::convertible_to<std::span<const double>>;
    { c.is_valid(r, r) } -> std::convertible_to<bool>;
    c.read_pixel(r, r, out);
};

/// Scratch buffers and kernels for one worker.
class PixelClassifier {
public:
    PixelClassifier(std::size_t bands, const rules::CompiledRuleSet& crs, const PipelineConfig& cfg)
        : crs_(crs), cfg_(cfg), sg_(bands, cfg.smooth_window, cfg.smooth_order),
          raw_(bands), smoothed_(bands), hull_(bands), cr_(bands) {
        knots_.reserve(bands);
    }

    std::span<double> input() { return raw_; }

    /// Classifies the spectrum currently in input().
    ClassId run() {
        if (crs_.rules.empty()) return kUnclassified;
        sg_.apply(raw_, smoothed_);
        upper_convex_hull_into(smoothed_, knots_, hull_);
        if (!continuum_remove_into(smoothed_, hull_, cfg_.continuum_mode, cr_)) return kUnclassified;
        const rules::LazyCurvatureSource src{cr_, raw_, cfg_.x_scale};
        return rules::classify(crs_, src).value_or(kUnclassified);
    }

private:
    const rules::CompiledRuleSet& crs_;
    const PipelineConfig& cfg_;
    SavitzkyGolay sg_;
    std::vector<double> raw_, smoothed_, hull_, cr_;
    std::vector<std::size_t> knots_;
};

inline void check_provenance(const rules::CompiledRuleSet& crs, std::span<const double> wavelengths,
                             const PipelineConfig& cfg) {
    rules::check_axis(crs, wavelengths);
    if (!crs.rules.empty() && crs.continuum_mode != cfg.continuum_mode)
        throw ConfigError(std::string("rules were compiled for continuum mode '") + to_string(crs.continuum_mode) +
                          "' but the pipeline uses '" + to_string(cfg.continuum_mode) + "'");
    if (!crs.rules.empty() && crs.x_scale != cfg.x_scale)
        throw ConfigError("rules were compiled for a different curvature x-scale");
}

struct ClassifyOptions {
    /// Sample every `stride`-th row and column (preview); 1 = full resolution.
    std::size_t stride = 1;
    std::stop_token stop{};
};

/// Label map over `cube`. Invalid pixels get 0. Output is independent of the
/// number of workers: each pixel is computed alone and written to its own slot.
template <CubeSource Cube>
LabelMap classify_cube(const Cube& cube, const rules::CompiledRuleSet& crs, const PipelineConfig& cfg,
                       const ClassifyOptions& opt = {}) {
    cfg.validate(cube.bands());
    check_provenance(crs, cube.wavelengths(), cfg);
    if (opt.stride == 0) throw ConfigError("downsample stride must be >= 1");
    const std::size_t stride = opt.stride;
    const std::size_t out_rows = (cube.rows() + stride - 1) / stride;
    const std::size_t out_cols = (cube.cols() + stride - 1) / stride;
    LabelMap map(out_rows, out_cols, crs.class_table());
    if (out_rows == 0 || out_cols == 0) return map;

    const std::size_t workers = std::min(resolve_thread_count(cfg.threads), out_rows);
    std::atomic<std::size_t> next_row{0};
    std::atomic<bool> cancelled{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    constexpr std::size_t kRowsPerGrab = 4;

    auto work = [&] {
        try {
            PixelClassifier pc(cube.bands(), crs, cfg);
            for (;;) {
                if (opt.stop.stop_requested()) {
                    cancelled = true;
                    return;
                }
                const std::size_t r0 = next_row.fetch_add(kRowsPerGrab);
                if (r0 >= out_rows) return;
                const std::size_t r1 = std::min(out_rows, r0 + kRowsPerGrab);
                for (std::size_t r = r0; r < r1; ++r)
                    for (std::size_t c = 0; c < out_cols; ++c) {
                        const std::size_t sr = r * stride, sc = c * stride;
                        if (!cube.is_valid(sr, sc)) continue;
                        cube.read_pixel(sr, sc, pc.input());
                        map.labels[r * out_cols + c] = pc.run();
                    }
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    if (cancelled) throw Cancelled();
    return map;
}

}  // namespace specshape
