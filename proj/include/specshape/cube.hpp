#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace specshape {

enum class Interleave { bsq, bil, bip };

inline const char* to_string(Interleave il) {
    switch (il) {
        case Interleave::bsq: return "bsq";
        case Interleave::bil: return "bil";
        case Interleave::bip: return "bip";
    }
    return "?";
}

/// Reflectance cube. Samples are held pixel-interleaved (BIP) so one pixel's
/// spectrum is contiguous; `source_layout` records what the file used.
class SpectralCube {
public:
    SpectralCube() = default;

    SpectralCube(std::size_t rows, std::size_t cols, std::vector<double> wavelengths,
                 std::vector<float> bip_data, Interleave source_layout = Interleave::bip)
        : rows_(rows), cols_(cols), bands_(wavelengths.size()),
          wavelengths_(std::move(wavelengths)), data_(std::move(bip_data)),
          valid_(rows * cols, 1), layout_(source_layout) {
        check();
    }

    /// All-zero cube with every pixel valid.
    static SpectralCube zeros(std::size_t rows, std::size_t cols, std::vector<double> wavelengths) {
        const std::size_t n = rows * cols * wavelengths.size();
        return SpectralCube(rows, cols, std::move(wavelengths), std::vector<float>(n, 0.0f));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t bands() const { return bands_; }
    std::size_t pixel_count() const { return rows_ * cols_; }
    Interleave source_layout() const { return layout_; }
    void set_source_layout(Interleave il) { layout_ = il; }

    std::span<const double> wavelengths() const { return wavelengths_; }
    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    float at(std::size_t row, std::size_t col, std::size_t band) const {
        return data_[(row * cols_ + col) * bands_ + band];
    }
    float& at(std::size_t row, std::size_t col, std::size_t band) {
        return data_[(row * cols_ + col) * bands_ + band];
    }

    std::span<const float> pixel(std::size_t row, std::size_t col) const {
        return {data_.data() + (row * cols_ + col) * bands_, bands_};
    }
    std::span<float> pixel(std::size_t row, std::size_t col) {
        return {data_.data() + (row * cols_ + col) * bands_, bands_};
    }

    /// Copies one spectrum into `out` (size == bands) as doubles.
    void read_pixel(std::size_t row, std::size_t col, std::span<double> out) const {
        const auto px = pixel(row, col);
        for (std::size_t b = 0; b < bands_; ++b) out[b] = px[b];
    }

    bool is_valid(std::size_t row, std::size_t col) const { return valid_[row * cols_ + col] != 0; }
    void set_valid(std::size_t row, std::size_t col, bool v) { valid_[row * cols_ + col] = v ? 1 : 0; }
    std::span<const std::uint8_t> valid_mask() const { return valid_; }

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (auto v : valid_) n += v;
        return n;
    }

    friend bool operator==(const SpectralCube&, const SpectralCube&) = default;

private:
    void check() const {
        if (wavelengths_.size() != bands_) throw IoError("wavelength count does not match band count");
        if (data_.size() != rows_ * cols_ * bands_)
            throw IoError("cube data size " + std::to_string(data_.size()) + " != rows*cols*bands " +
                          std::to_string(rows_ * cols_ * bands_));
        for (std::size_t i = 1; i < wavelengths_.size(); ++i)
            if (!(wavelengths_[i] > wavelengths_[i - 1]))
                throw IoError("wavelengths not strictly increasing at band " + std::to_string(i));
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t bands_ = 0;
    std::vector<double> wavelengths_;
    std::vector<float> data_;
    std::vector<std::uint8_t> valid_;
    Interleave layout_ = Interleave::bip;
};

/// Evenly spaced axis `first..last` nm with `bands` samples.
inline std::vector<double> linear_axis(double first_nm, double last_nm, std::size_t bands) {
    std::vector<double> axis(bands);
    for (std::size_t i = 0; i < bands; ++i)
        axis[i] = bands == 1 ? first_nm : first_nm + (last_nm - first_nm) * double(i) / double(bands - 1);
    return axis;
}

}  // namespace specshape
