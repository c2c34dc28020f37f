#include "arit/metrics/embedder.hpp"

#include "arit/common/threading.hpp"

namespace arit::metrics {

Eigen::MatrixXd embed_all(const Embedder& embedder, const std::vector<img::ImageTensor>& images) {
    if (images.empty()) throw DataError("embed_all: empty image list");
    Eigen::MatrixXd feats(images.size(), embedder.dim());
    parallel_for(int(images.size()), [&](int i) {
        feats.row(i) = embedder.embed(images[size_t(i)]).transpose();
    });
    return feats;
}

} // namespace arit::metrics
