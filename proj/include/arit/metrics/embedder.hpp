#pragma once

#include <vector>

#include <Eigen/Dense>

#include "arit/imagecore/image.hpp"

namespace arit::metrics {

// Image -> fixed-length feature vector, deterministic. The default production
// implementation is the seeded convolutional extractor with global average
// pooling (d = 192); tests may plug in trivial embedders.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual int dim() const = 0;
    virtual Eigen::VectorXd embed(const img::ImageTensor& image) const = 0;
};

// One row per image; parallel over images, output order fixed by input order.
Eigen::MatrixXd embed_all(const Embedder& embedder, const std::vector<img::ImageTensor>& images);

} // namespace arit::metrics
