#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fgsm/rng.hpp"
#include "fgsm/tensor.hpp"

namespace fgsm {

/// Images in [0, 1] with integer labels indexing `class_names`.
struct Dataset {
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    std::vector<std::string> class_names;

    std::size_t size() const { return images.size(); }
    bool empty() const { return images.empty(); }
    std::size_t num_classes() const { return class_names.size(); }

    /// Throws DataError if lengths disagree, a label is out of range or a pixel leaves [0, 1].
    void validate() const;
};

// ---- image files -----------------------------------------------------------

/// Reads binary PPM (P6), PGM (P5) or a raw TNSR tensor; pixels scaled to [0, 1].
Tensor read_image(const std::string& path);

/// Writes by extension: ".ppm" (needs 3 channels), ".pgm" (1 channel) or ".tnsr".
/// Pixel values are clamped to [0, 1] and quantized to 8 bits for PPM/PGM.
void write_image(const std::string& path, const Tensor& image);

/// Bilinear resize (half-pixel centers) plus channel conversion (gray <-> RGB).
Tensor resize_image(const Tensor& image, std::size_t height, std::size_t width, std::size_t channels);

/// Loads `root/<class_name>/<image files>`. Classes are the subdirectory names
/// sorted lexicographically; images are resized to `image_shape`.
Dataset load_image_dir(const std::string& root, const Shape& image_shape);

// ---- augmentation ----------------------------------------------------------

struct AugmentConfig {
    double rotation_max_deg = 15.0;
    double zoom_lo = 0.9;
    double zoom_hi = 1.1;
    double shift_max_frac = 0.1;
    bool horizontal_flip = true;

    /// Every field at its no-op value.
    static AugmentConfig identity() { return {0.0, 1.0, 1.0, 0.0, false}; }
    void validate() const;
};

/// One concrete draw of augmentation parameters.
struct AugmentParams {
    bool flip = false;
    double rotation_deg = 0.0;  // counter-clockwise as displayed
    double zoom = 1.0;          // > 1 magnifies
    double shift_x = 0.0;       // fraction of width, positive moves content right
    double shift_y = 0.0;       // fraction of height, positive moves content down
};

AugmentParams draw_augment_params(const AugmentConfig& cfg, Rng& rng);

/// Applies flip, rotate, zoom and shift as one inverse-mapped bilinear
/// resampling about the image center; out-of-bounds samples read 0. Result is
/// clipped to [0, 1].
Tensor apply_augment(const Tensor& image, const AugmentParams& params);

Tensor augment(const Tensor& image, const AugmentConfig& cfg, Rng& rng);

// ---- synthetic data and splitting ------------------------------------------

/// Deterministic `classes`-way dataset of dim x dim x 3 images. Each class
/// template is a shared low-frequency base image plus a faint seeded
/// low-frequency class pattern (+/-0.1); every sample adds uniform noise of
/// amplitude 0.1.
Dataset synth_dataset(std::size_t classes, std::size_t per_class, std::size_t dim, std::uint64_t seed);

/// Stratified, seeded train/validation partition. Each class with n samples
/// puts round(train_frac * n), clamped to [1, n - 1], into training.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const Dataset& ds, double train_frac,
                                                                            std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_frac, std::uint64_t seed);

/// Subset by index, keeping class names.
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

// ---- dataset cache ---------------------------------------------------------

// "DSET", u32 count, then per sample (u32 label, TNSR image). Class names are
// not stored; loading names them class_0 .. class_{max label}.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

} // namespace fgsm
