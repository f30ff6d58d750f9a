#include "gsdnet/multimodal.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace gsdnet {

char modality_code(Modality m) {
    switch (m) {
        case Modality::Language: return 'l';
        case Modality::Audio: return 'a';
        case Modality::Video: return 'v';
    }
    throw std::invalid_argument("modality_code: bad modality");
}

Modality modality_from_code(char c) {
    switch (c) {
        case 'l':
        case 't': return Modality::Language;
        case 'a': return Modality::Audio;
        case 'v': return Modality::Video;
        default:
            throw std::invalid_argument(std::string("modality_from_code: unknown code '") +
                                        c + "'");
    }
}

MissingPattern MissingPattern::from_alpha(const std::array<bool, 3>& alpha) {
    if (!alpha[0] && !alpha[1] && !alpha[2])
        throw std::invalid_argument(
            "MissingPattern: at least one modality must be observed");
    MissingPattern p;
    p.alpha_ = alpha;
    return p;
}

MissingPattern MissingPattern::complete() {
    return from_alpha({true, true, true});
}

MissingPattern MissingPattern::from_string(std::string_view id) {
    std::array<bool, 3> alpha = {false, false, false};
    for (char c : id) {
        if (c == '{' || c == '}' || c == ',' || c == ' ') continue;
        alpha[static_cast<std::size_t>(modality_from_code(c))] = true;
    }
    return from_alpha(alpha);
}

std::vector<Modality> MissingPattern::observed_set() const {
    std::vector<Modality> out;
    for (Modality m : kAllModalities)
        if (observed(m)) out.push_back(m);
    return out;
}

std::vector<Modality> MissingPattern::missing_set() const {
    std::vector<Modality> out;
    for (Modality m : kAllModalities)
        if (!observed(m)) out.push_back(m);
    return out;
}

std::string MissingPattern::id() const {
    // canonical letter order l, v, a
    std::string s;
    if (observed(Modality::Language)) s += 'l';
    if (observed(Modality::Video)) s += 'v';
    if (observed(Modality::Audio)) s += 'a';
    return s;
}

const std::array<MissingPattern, 7>& MissingPattern::menu() {
    static const std::array<MissingPattern, 7> menu = {
        MissingPattern::from_string("l"),  MissingPattern::from_string("v"),
        MissingPattern::from_string("a"),  MissingPattern::from_string("lv"),
        MissingPattern::from_string("la"), MissingPattern::from_string("va"),
        MissingPattern::from_string("lva")};
    return menu;
}

const Eigen::MatrixXd& MultimodalSample::get(Modality m) const {
    const auto& opt = modalities[static_cast<std::size_t>(m)];
    if (!opt)
        throw std::invalid_argument(std::string("MultimodalSample: modality '") +
                                    modality_code(m) + "' not present");
    return *opt;
}

int MultimodalSample::n_utterances() const {
    for (const auto& m : modalities)
        if (m) return static_cast<int>(m->rows());
    return 0;
}

void MultimodalSample::validate() const {
    int n = -1;
    bool any = false;
    for (const auto& m : modalities) {
        if (!m) continue;
        any = true;
        if (m->rows() < 1 || m->cols() < 1)
            throw std::invalid_argument("MultimodalSample: empty modality matrix");
        if (!m->allFinite())
            throw std::invalid_argument("MultimodalSample: non-finite entries");
        if (n < 0)
            n = static_cast<int>(m->rows());
        else if (n != static_cast<int>(m->rows()))
            throw std::invalid_argument(
                "MultimodalSample: modalities disagree on utterance count");
    }
    if (!any) throw std::invalid_argument("MultimodalSample: no modalities present");
    if (!std::isfinite(label))
        throw std::invalid_argument("MultimodalSample: non-finite label");
}

namespace {
constexpr char kMagic[8] = {'G', 'S', 'D', 'N', 'D', 'A', 'T', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw io_error("dataset: truncated stream");
    return v;
}
}  // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("save_dataset: cannot open " + path);
    os.write(kMagic, 8);
    put<std::uint64_t>(os, ds.samples.size());
    for (const auto& s : ds.samples) {
        put<std::int32_t>(os, s.n_utterances());
        put<double>(os, s.label);
        for (Modality m : kAllModalities) {
            const auto& opt = s.modalities[static_cast<std::size_t>(m)];
            put<std::uint8_t>(os, opt ? 1 : 0);
            if (!opt) continue;
            put<std::int64_t>(os, opt->rows());
            put<std::int64_t>(os, opt->cols());
            for (Eigen::Index i = 0; i < opt->rows(); ++i)
                for (Eigen::Index j = 0; j < opt->cols(); ++j) put(os, (*opt)(i, j));
        }
    }
    if (!os) throw io_error("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("load_dataset: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw io_error("load_dataset: bad magic in " + path);
    Dataset ds;
    const auto count = get<std::uint64_t>(is);
    ds.samples.resize(count);
    for (auto& s : ds.samples) {
        get<std::int32_t>(is);  // utterance count, redundant with shapes
        s.label = get<double>(is);
        for (Modality m : kAllModalities) {
            const auto present = get<std::uint8_t>(is);
            if (!present) continue;
            const auto rows = get<std::int64_t>(is);
            const auto cols = get<std::int64_t>(is);
            Eigen::MatrixXd mat(rows, cols);
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index j = 0; j < cols; ++j) mat(i, j) = get<double>(is);
            s.modalities[static_cast<std::size_t>(m)] = std::move(mat);
        }
        s.validate();
    }
    return ds;
}

const Eigen::MatrixXd& EncodedModalities::get(Modality m) const {
    const auto& opt = feats[static_cast<std::size_t>(m)];
    if (!opt)
        throw std::invalid_argument(std::string("EncodedModalities: modality '") +
                                    modality_code(m) + "' not present");
    return *opt;
}

std::vector<Modality> EncodedModalities::present() const {
    std::vector<Modality> out;
    for (Modality m : kAllModalities)
        if (has(m)) out.push_back(m);
    return out;
}

}  // namespace gsdnet
