#pragma once

#include <vector>

#include <Eigen/Core>

#include "gsdnet/multimodal.hpp"
#include "gsdnet/spectral.hpp"

namespace gsdnet {

struct GraphBuildOptions {
    int window = 2;                   // intra-modality utterance window
    double degenerate_weight = 1e-6;  // edge weight when a feature row has no norm
};

// Conversation graph over (utterance, modality-slot) nodes. Node order is
// slot-major: node(slot s, utterance i) = s * N + i, slots in the order of
// `slots`. Edges: within a slot, utterances at distance 1..window; across
// slots, same-utterance pairs. Weights are cosine similarity clipped to
// [0, 1]; zero diagonal.
struct ConversationGraph {
    Eigen::MatrixXd features;  // (|slots| * N) x d
    SymmetricMatrix adjacency;
    SpectralDecomposition spectrum;
    std::vector<Modality> slots;
    int n_utterances = 0;
    bool degenerate = false;  // some feature row had ~zero norm

    ConversationGraph() : adjacency(SymmetricMatrix::zero(1)) {}
};

// Graph over every encoded modality (at least one required).
ConversationGraph build_graph(const EncodedModalities& enc,
                              const GraphBuildOptions& opts = {});

// Graph over a single modality's N rows.
ConversationGraph build_modality_subgraph(const EncodedModalities& enc, Modality m,
                                          const GraphBuildOptions& opts = {});

// The windowed-cosine adjacency rule on an explicit stacked feature matrix.
// `blocks` lists the row count of each slot in order; rows of `features` are
// slot-major. Exposed so tests can compare against a brute-force double loop.
Eigen::MatrixXd windowed_cosine_adjacency(const Eigen::MatrixXd& features,
                                          const std::vector<int>& block_sizes,
                                          const GraphBuildOptions& opts,
                                          bool* degenerate_flag = nullptr);

}  // namespace gsdnet
