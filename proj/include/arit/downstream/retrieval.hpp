#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arit/imagecore/pose.hpp"
#include "arit/metrics/embedder.hpp"
#include "arit/metrics/report.hpp"

namespace arit::downstream {

// Virtual-image database for retrieval-based registration: one unit-norm
// embedding row and one camera pose per frame.
struct RetrievalIndex {
    Eigen::MatrixXd embeddings; // n x d, rows L2-normalized
    std::vector<img::CameraPose> poses;
    std::string embedder_id;

    int size() const { return int(embeddings.rows()); }
    void validate() const;
};

// Embeds and normalizes every image. images and poses must pair up.
RetrievalIndex build_index(const std::vector<img::ImageTensor>& images,
                           const std::vector<img::CameraPose>& poses,
                           const metrics::Embedder& embedder,
                           const std::string& embedder_id = "seeded-conv");

// Same, from precomputed embeddings (rows are normalized here). This is also
// the injection point for tests that need hand-built geometry.
RetrievalIndex index_from_embeddings(Eigen::MatrixXd embeddings,
                                     std::vector<img::CameraPose> poses,
                                     const std::string& embedder_id = "injected");

// Nearest database entry per query by cosine similarity; ties resolve to the
// lowest database id. Reports recall at threshold_mm (camera position
// distance) plus per-query nearest ids and position errors.
metrics::MetricReport register_embeddings(const Eigen::MatrixXd& query_embeddings,
                                          const std::vector<img::CameraPose>& query_poses,
                                          const RetrievalIndex& index, double threshold_mm = 5.0);

metrics::MetricReport register_images(const std::vector<img::ImageTensor>& queries,
                                      const std::vector<img::CameraPose>& query_poses,
                                      const RetrievalIndex& index,
                                      const metrics::Embedder& embedder,
                                      double threshold_mm = 5.0);

// Binary index format: little-endian 'RIDX' magic, u32 version, u32 n, u32 d,
// n*d f32 embeddings row-major, then a length-prefixed JSON block holding
// poses and the embedder id.
void write_index(const std::string& path, const RetrievalIndex& index);
RetrievalIndex read_index(const std::string& path);

} // namespace arit::downstream
