#pragma once

// Synthetic scenes with known ground truth: each class is a smooth
// background continuum carrying its own Gaussian absorption bands, laid out
// as rectangular blocks on a featureless background.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cube.hpp"
#include "label_map.hpp"
#include "preprocess.hpp"

namespace specshape::synthetic {

struct Absorption {
    double center_band;
    double depth;      // fraction removed at the center, 0..1
    double sigma_bands;
};

struct ClassShape {
    std::string name;
    std::vector<Absorption> absorptions;
};

struct SceneSpec {
    std::size_t rows = 661;
    std::size_t cols = 500;
    std::size_t bands = 229;
    double first_nm = 900;
    double last_nm = 1700;
    std::vector<ClassShape> classes;
    std::size_t grid_rows = 2;   // blocks are laid out on a grid_rows x grid_cols grid
    std::size_t grid_cols = 4;
    std::size_t gutter = 12;     // background pixels between blocks
    double noise = 0.01;         // Gaussian sd, relative to the pixel's mean level
    double brightness_jitter = 0.15;
    std::uint64_t seed = 20211;
};

/// Seven classes with two absorption bands each, no band shared across
/// classes, spread over the interior of a 229-band axis.
inline std::vector<ClassShape> default_classes(std::size_t bands = 229) {
    std::vector<ClassShape> out;
    const double lo = 14.0, hi = double(bands) - 15.0;
    const double step = (hi - lo) / 13.0;
    for (std::size_t k = 0; k < 7; ++k) {
        ClassShape c;
        c.name = "C" + std::to_string(k + 1);
        c.absorptions.push_back({lo + step * double(k), 0.55, 1.4});
        c.absorptions.push_back({lo + step * double(k + 7), 0.45, 1.4});
        out.push_back(std::move(c));
    }
    return out;
}

/// Featureless, gently concave continuum in [~0.45, 0.6].
inline double background_level(std::size_t band, std::size_t bands) {
    const double t = (double(band) / double(bands - 1)) * 2.0 - 1.0;
    return 0.6 - 0.15 * t * t;
}

inline std::vector<double> class_spectrum(const ClassShape& shape, std::size_t bands) {
    std::vector<double> v(bands);
    for (std::size_t b = 0; b < bands; ++b) {
        double y = background_level(b, bands);
        for (const auto& a : shape.absorptions) {
            const double z = (double(b) - a.center_band) / a.sigma_bands;
            y *= 1.0 - a.depth * std::exp(-0.5 * z * z);
        }
        v[b] = y;
    }
    return v;
}

struct Scene {
    SpectralCube cube;
    LabelMap truth;
    std::vector<Spectrum> prototypes;  // noise-free, one per class, in class-id order
    SceneSpec spec;
};

/// The truth class id at (row, col): blocks fill the grid cells in row-major
/// order, class k -> cell k; remaining cells and gutters are 0.
inline ClassId block_label(const SceneSpec& s, std::size_t row, std::size_t col) {
    const std::size_t cell_h = s.rows / s.grid_rows, cell_w = s.cols / s.grid_cols;
    const std::size_t gr = row / cell_h, gc = col / cell_w;
    if (gr >= s.grid_rows || gc >= s.grid_cols) return kUnclassified;
    const std::size_t ir = row % cell_h, ic = col % cell_w;
    if (ir < s.gutter || ic < s.gutter || ir >= cell_h - s.gutter || ic >= cell_w - s.gutter) return kUnclassified;
    const std::size_t cell = gr * s.grid_cols + gc;
    return cell < s.classes.size() ? ClassId(cell + 1) : kUnclassified;
}

inline Scene make_scene(SceneSpec spec) {
    if (spec.classes.empty()) spec.classes = default_classes(spec.bands);
    Scene scene;
    const auto axis = linear_axis(spec.first_nm, spec.last_nm, spec.bands);
    ClassTable table;
    std::vector<std::vector<double>> protos;
    protos.push_back(class_spectrum(ClassShape{"background", {}}, spec.bands));
    for (std::size_t k = 0; k < spec.classes.size(); ++k) {
        table[ClassId(k + 1)] = {spec.classes[k].name, default_class_color(ClassId(k + 1))};
        protos.push_back(class_spectrum(spec.classes[k], spec.bands));
        scene.prototypes.push_back({axis, protos.back(), SpectrumKind::raw});
    }
    scene.truth = LabelMap(spec.rows, spec.cols, table);
    scene.cube = SpectralCube::zeros(spec.rows, spec.cols, axis);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> jitter(1.0 - spec.brightness_jitter, 1.0 + spec.brightness_jitter);
    for (std::size_t r = 0; r < spec.rows; ++r)
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const ClassId id = block_label(spec, r, c);
            scene.truth.at(r, c) = id;
            const auto& proto = protos[id];
            const double gain = jitter(rng);
            double mean = 0;
            for (double v : proto) mean += v;
            const double sd = spec.noise * gain * mean / double(spec.bands);
            auto px = scene.cube.pixel(r, c);
            for (std::size_t b = 0; b < spec.bands; ++b) px[b] = float(proto[b] * gain + sd * gauss(rng));
        }
    scene.spec = std::move(spec);
    return scene;
}

}  // namespace specshape::synthetic
