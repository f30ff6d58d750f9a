#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "gsdnet/errors.hpp"

namespace gsdnet {

// Fixed slot order: language (text), audio, video.
enum class Modality : int { Language = 0, Audio = 1, Video = 2 };

inline constexpr std::array<Modality, 3> kAllModalities = {
    Modality::Language, Modality::Audio, Modality::Video};

inline constexpr int modality_index(Modality m) { return static_cast<int>(m); }

char modality_code(Modality m);           // 'l', 'a', 'v'
Modality modality_from_code(char c);      // accepts 'l'/'t', 'a', 'v'

// Availability indicator over the three modalities. At least one modality
// must be observed; I_o and I_m are derived, disjoint and exhaustive.
class MissingPattern {
public:
    static MissingPattern from_alpha(const std::array<bool, 3>& alpha);
    static MissingPattern complete();
    static MissingPattern from_string(std::string_view id);  // e.g. "lv", "a"

    bool observed(Modality m) const { return alpha_[static_cast<std::size_t>(m)]; }
    bool complete_case() const { return alpha_[0] && alpha_[1] && alpha_[2]; }
    std::vector<Modality> observed_set() const;  // I_o
    std::vector<Modality> missing_set() const;   // I_m
    std::string id() const;                      // canonical, letters in l,v,a order

    // The seven availability sets {l},{v},{a},{l,v},{l,a},{v,a},{l,v,a}.
    static const std::array<MissingPattern, 7>& menu();

    bool operator==(const MissingPattern& o) const { return alpha_ == o.alpha_; }

private:
    std::array<bool, 3> alpha_ = {true, true, true};
};

// One conversation: per-modality utterance matrices plus a scalar label.
struct MultimodalSample {
    std::array<std::optional<Eigen::MatrixXd>, 3> modalities;  // each N x d_m
    double label = 0.0;

    bool has(Modality m) const {
        return modalities[static_cast<std::size_t>(m)].has_value();
    }
    const Eigen::MatrixXd& get(Modality m) const;
    int n_utterances() const;
    void validate() const;  // shared N, positive dims, finite entries
};

struct Dataset {
    std::vector<MultimodalSample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

// Modality matrices mapped into the shared N x d feature space.
struct EncodedModalities {
    std::array<std::optional<Eigen::MatrixXd>, 3> feats;
    int n_utterances = 0;
    int dim = 0;

    bool has(Modality m) const { return feats[static_cast<std::size_t>(m)].has_value(); }
    const Eigen::MatrixXd& get(Modality m) const;
    std::vector<Modality> present() const;
};

}  // namespace gsdnet
