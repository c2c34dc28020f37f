#include "arit/downstream/retrieval.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

#include "arit/common/threading.hpp"
#include "arit/metrics/metrics.hpp"

namespace arit::downstream {

namespace {

Eigen::MatrixXd normalize_rows(Eigen::MatrixXd m, const char* what) {
    for (long i = 0; i < m.rows(); ++i) {
        const double norm = m.row(i).norm();
        if (norm < 1e-12)
            throw DataError(std::string(what) + ": zero embedding at row " + std::to_string(i));
        m.row(i) /= norm;
    }
    return m;
}

} // namespace

void RetrievalIndex::validate() const {
    if (embeddings.rows() == 0) throw DataError("RetrievalIndex: empty index");
    if (size_t(embeddings.rows()) != poses.size())
        throw DataError("RetrievalIndex: one pose per embedding required");
    for (long i = 0; i < embeddings.rows(); ++i)
        if (std::abs(embeddings.row(i).norm() - 1.0) > 1e-5)
            throw DataError("RetrievalIndex: embedding rows must be unit-norm");
}

RetrievalIndex build_index(const std::vector<img::ImageTensor>& images,
                           const std::vector<img::CameraPose>& poses,
                           const metrics::Embedder& embedder, const std::string& embedder_id) {
    if (images.empty()) throw DataError("build_index: no images");
    if (images.size() != poses.size()) throw DataError("build_index: image/pose count mismatch");
    return index_from_embeddings(metrics::embed_all(embedder, images), poses, embedder_id);
}

RetrievalIndex index_from_embeddings(Eigen::MatrixXd embeddings,
                                     std::vector<img::CameraPose> poses,
                                     const std::string& embedder_id) {
    if (embeddings.rows() == 0) throw DataError("index_from_embeddings: no embeddings");
    if (size_t(embeddings.rows()) != poses.size())
        throw DataError("index_from_embeddings: embedding/pose count mismatch");
    RetrievalIndex index;
    index.embeddings = normalize_rows(std::move(embeddings), "index_from_embeddings");
    index.poses = std::move(poses);
    index.embedder_id = embedder_id;
    return index;
}

metrics::MetricReport register_embeddings(const Eigen::MatrixXd& query_embeddings,
                                          const std::vector<img::CameraPose>& query_poses,
                                          const RetrievalIndex& index, double threshold_mm) {
    index.validate();
    const long n = query_embeddings.rows();
    if (n == 0) throw DataError("register: no queries");
    if (size_t(n) != query_poses.size()) throw DataError("register: query/pose count mismatch");
    if (query_embeddings.cols() != index.embeddings.cols())
        throw DataError("register: embedding dimension mismatch");

    const Eigen::MatrixXd queries = normalize_rows(query_embeddings, "register");
    std::vector<int> nearest(size_t(n), 0);
    parallel_for(int(n), [&](int i) {
        const Eigen::VectorXd sims = index.embeddings * queries.row(i).transpose();
        int best = 0;
        for (int j = 1; j < sims.size(); ++j)
            if (sims[j] > sims[best]) best = j; // ties keep the lowest id
        nearest[size_t(i)] = best;
    });

    std::vector<Eigen::Vector3d> query_pos, retrieved_pos;
    metrics::MetricReport report;
    auto& ids = report.per_item["nearest_id"];
    auto& errors = report.per_item["position_error_mm"];
    for (long i = 0; i < n; ++i) {
        const int j = nearest[size_t(i)];
        query_pos.push_back(query_poses[size_t(i)].position);
        retrieved_pos.push_back(index.poses[size_t(j)].position);
        ids.push_back(double(j));
        errors.push_back((query_pos.back() - retrieved_pos.back()).norm());
    }
    report.scalars["recall"] = metrics::recall_at(query_pos, retrieved_pos, threshold_mm);
    report.scalars["n_queries"] = double(n);
    report.metadata["embedder_id"] = index.embedder_id;
    report.metadata["threshold_mm"] = std::to_string(threshold_mm);
    return report;
}

metrics::MetricReport register_images(const std::vector<img::ImageTensor>& queries,
                                      const std::vector<img::CameraPose>& query_poses,
                                      const RetrievalIndex& index,
                                      const metrics::Embedder& embedder, double threshold_mm) {
    if (queries.empty()) throw DataError("register: no queries");
    return register_embeddings(metrics::embed_all(embedder, queries), query_poses, index,
                               threshold_mm);
}

namespace {

constexpr char kMagic[4] = {'R', 'I', 'D', 'X'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("index file: truncated");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

} // namespace

void write_index(const std::string& path, const RetrievalIndex& index) {
    index.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("index file: cannot open for write: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, uint32_t(index.embeddings.rows()));
    put_u32(out, uint32_t(index.embeddings.cols()));
    for (long i = 0; i < index.embeddings.rows(); ++i)
        for (long j = 0; j < index.embeddings.cols(); ++j) {
            const float f = float(index.embeddings(i, j));
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(out, bits);
        }

    nlohmann::json meta;
    meta["embedder_id"] = index.embedder_id;
    meta["poses"] = nlohmann::json::array();
    for (const img::CameraPose& p : index.poses)
        meta["poses"].push_back(
            {{"position", {p.position.x(), p.position.y(), p.position.z()}},
             {"quaternion",
              {p.orientation.w(), p.orientation.x(), p.orientation.y(), p.orientation.z()}}});
    const std::string blob = meta.dump();
    put_u32(out, uint32_t(blob.size()));
    out.write(blob.data(), std::streamsize(blob.size()));
    if (!out) throw DataError("index file: write failed: " + path);
}

RetrievalIndex read_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("index file: cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("index file: bad magic: " + path);
    if (get_u32(in) != kVersion) throw DataError("index file: unsupported version");
    const uint32_t n = get_u32(in);
    const uint32_t d = get_u32(in);
    if (n == 0 || d == 0) throw DataError("index file: empty index");

    RetrievalIndex index;
    index.embeddings.resize(n, d);
    for (uint32_t i = 0; i < n; ++i)
        for (uint32_t j = 0; j < d; ++j) {
            const uint32_t bits = get_u32(in);
            float f;
            std::memcpy(&f, &bits, 4);
            index.embeddings(i, j) = double(f);
        }

    const uint32_t blob_size = get_u32(in);
    std::string blob(blob_size, '\0');
    in.read(blob.data(), std::streamsize(blob_size));
    if (!in) throw DataError("index file: truncated");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(blob);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("index file: bad metadata block: ") + e.what());
    }
    index.embedder_id = meta.at("embedder_id").get<std::string>();
    for (const auto& jp : meta.at("poses")) {
        img::CameraPose p;
        const auto& pos = jp.at("position");
        p.position = {pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>()};
        const auto& q = jp.at("quaternion");
        p.orientation = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                           q.at(2).get<double>(), q.at(3).get<double>());
        index.poses.push_back(p);
    }
    index.validate();
    return index;
}

} // namespace arit::downstream
