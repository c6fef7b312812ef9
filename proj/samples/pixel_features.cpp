// Prints the feature points of one pixel of an ENVI cube, or of a synthetic
// absorption spectrum when no cube is given.
//
//   pixel_features [cube.hdr row col]

#include <iostream>
#include <string>

#include <specshape/specshape.hpp>

using namespace specshape;

int main(int argc, char** argv) {
    try {
        Spectrum s;
        if (argc == 4) {
            const auto cube = envi::read_envi(argv[1]);
            s = pixel_spectrum(cube, std::stoul(argv[2]), std::stoul(argv[3]));
        } else {
            const auto shapes = synthetic::default_classes();
            s = {linear_axis(900, 1700, 229), synthetic::class_spectrum(shapes[2], 229), SpectrumKind::raw};
        }
        const auto a = analyze_spectrum(s, PipelineConfig{});
        std::cout << format_feature_csv(a.features);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
