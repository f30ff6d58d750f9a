#include "gsdnet/graph.hpp"

#include <algorithm>
#include <cmath>

namespace gsdnet {

namespace {
constexpr double kNormFloor = 1e-12;

double clipped_cosine(const Eigen::MatrixXd& f, Eigen::Index a, Eigen::Index b,
                      double degenerate_weight, bool* degenerate_flag) {
    const double na = f.row(a).norm();
    const double nb = f.row(b).norm();
    if (na < kNormFloor || nb < kNormFloor) {
        if (degenerate_flag) *degenerate_flag = true;
        return degenerate_weight;
    }
    const double c = f.row(a).dot(f.row(b)) / (na * nb);
    return std::clamp(c, 0.0, 1.0);
}
}  // namespace

Eigen::MatrixXd windowed_cosine_adjacency(const Eigen::MatrixXd& features,
                                          const std::vector<int>& block_sizes,
                                          const GraphBuildOptions& opts,
                                          bool* degenerate_flag) {
    if (opts.window < 0) throw std::invalid_argument("windowed_cosine_adjacency: window < 0");
    Eigen::Index total = 0;
    for (int b : block_sizes) {
        if (b < 1) throw std::invalid_argument("windowed_cosine_adjacency: empty block");
        if (b != block_sizes.front())
            throw std::invalid_argument("windowed_cosine_adjacency: unequal block sizes");
        total += b;
    }
    if (total != features.rows())
        throw std::invalid_argument("windowed_cosine_adjacency: feature rows mismatch");

    const int n = block_sizes.empty() ? 0 : block_sizes.front();
    const int n_slots = static_cast<int>(block_sizes.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(total, total);

    auto node = [n](int slot, int utt) {
        return static_cast<Eigen::Index>(slot) * n + utt;
    };

    for (int s = 0; s < n_slots; ++s) {
        // intra-slot window edges
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j <= std::min(n - 1, i + opts.window); ++j) {
                const double w = clipped_cosine(features, node(s, i), node(s, j),
                                                opts.degenerate_weight, degenerate_flag);
                a(node(s, i), node(s, j)) = w;
                a(node(s, j), node(s, i)) = w;
            }
        }
        // cross-slot same-utterance edges
        for (int s2 = s + 1; s2 < n_slots; ++s2) {
            for (int i = 0; i < n; ++i) {
                const double w = clipped_cosine(features, node(s, i), node(s2, i),
                                                opts.degenerate_weight, degenerate_flag);
                a(node(s, i), node(s2, i)) = w;
                a(node(s2, i), node(s, i)) = w;
            }
        }
    }
    return a;
}

namespace {
ConversationGraph build_from_slots(const EncodedModalities& enc,
                                   const std::vector<Modality>& slots,
                                   const GraphBuildOptions& opts) {
    const int n = enc.n_utterances;
    const int d = enc.dim;
    if (n < 1) throw std::invalid_argument("build_graph: need at least one utterance");
    if (slots.empty()) throw std::invalid_argument("build_graph: need at least one modality");

    ConversationGraph g;
    g.slots = slots;
    g.n_utterances = n;
    g.features.resize(static_cast<Eigen::Index>(slots.size()) * n, d);
    for (std::size_t s = 0; s < slots.size(); ++s)
        g.features.middleRows(static_cast<Eigen::Index>(s) * n, n) = enc.get(slots[s]);

    std::vector<int> blocks(slots.size(), n);
    bool degenerate = false;
    Eigen::MatrixXd a = windowed_cosine_adjacency(g.features, blocks, opts, &degenerate);
    g.degenerate = degenerate;
    g.adjacency = SymmetricMatrix(a);
    g.spectrum = eigh(g.adjacency);
    return g;
}
}  // namespace

ConversationGraph build_graph(const EncodedModalities& enc, const GraphBuildOptions& opts) {
    return build_from_slots(enc, enc.present(), opts);
}

ConversationGraph build_modality_subgraph(const EncodedModalities& enc, Modality m,
                                          const GraphBuildOptions& opts) {
    return build_from_slots(enc, {m}, opts);
}

}  // namespace gsdnet
