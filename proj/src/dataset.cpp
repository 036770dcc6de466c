#include "geopep/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

namespace geopep {

FilterOutcome filter_complexes(const std::vector<Complex>& complexes, const FilterRules& rules) {
    FilterOutcome out;
    for (const auto& cx : complexes) {
        bool resolution_ok = true;
        if (cx.method == ExperimentMethod::xray && cx.resolution &&
            *cx.resolution > rules.max_resolution)
            resolution_ok = false;

        for (const auto& pep : cx.chains) {
            for (const auto& prot : cx.chains) {
                if (pep.id == prot.id) continue;
                int pep_len = (int)pep.residues.size();
                int prot_len = (int)prot.residues.size();
                if (!resolution_ok) {
                    out.exclusion_counts["resolution"]++;
                } else if (pep_len < rules.peptide_min) {
                    out.exclusion_counts["peptide_too_short"]++;
                } else if (pep_len > rules.peptide_max) {
                    out.exclusion_counts["peptide_too_long"]++;
                } else if (prot_len > rules.protein_max) {
                    out.exclusion_counts["protein_too_long"]++;
                } else {
                    out.pairs.push_back({&cx, pep.id, prot.id});
                }
            }
        }
    }
    return out;
}

LabeledPair label_interface(const ChainPair& pair, double cutoff) {
    const Chain* pep = pair.complex->find_chain(pair.peptide_chain);
    const Chain* prot = pair.complex->find_chain(pair.protein_chain);
    if (!pep) throw ContractError("label_interface: peptide chain '" +
                                  std::string(1, pair.peptide_chain) + "' not in complex");
    if (!prot) throw ContractError("label_interface: protein chain '" +
                                   std::string(1, pair.protein_chain) + "' not in complex");
    if (pep->residues.empty() || prot->residues.empty())
        throw ContractError("label_interface: empty chain");
    if ((int)prot->residues.size() >= kProteinPad)
        throw ContractError("label_interface: protein chain exceeds padded length");

    LabeledPair lp;
    lp.pdb_id = pair.complex->pdb_id;
    lp.peptide_chain = pair.peptide_chain;
    lp.protein_chain = pair.protein_chain;
    lp.peptide_seq = pep->sequence();
    lp.protein_seq = prot->sequence();

    std::vector<Vec3> pep_atoms;
    for (const auto& r : pep->residues)
        for (const auto& a : r.atoms) pep_atoms.push_back(a.coord);

    std::vector<Vec3> prot_atoms;
    std::vector<size_t> owner; // protein atom -> residue index
    for (size_t ri = 0; ri < prot->residues.size(); ++ri) {
        const auto& r = prot->residues[ri];
        lp.mass_centers.push_back(r.mass_center());
        lp.res_seq.push_back(r.seq_id);
        lp.icode.push_back(r.insertion_code);
        std::vector<Vec3> atoms;
        for (const auto& a : r.atoms) {
            prot_atoms.push_back(a.coord);
            owner.push_back(ri);
            atoms.push_back(a.coord);
        }
        lp.residue_atoms.push_back(std::move(atoms));
    }

    lp.labels.assign(kProteinPad, 0);
    lp.mask.assign(kProteinPad, 0);
    for (size_t i = 0; i < prot->residues.size(); ++i) lp.mask[i] = 1;

    for (const auto& [pi, qi] : neighbor_pairs(prot_atoms, pep_atoms, cutoff))
        lp.labels[owner[pi]] = 1;
    return lp;
}

std::vector<int> expand_labels(const std::vector<int>& labels, const std::vector<int>& mask,
                               int window) {
    if (window < 0) throw ContractError("expand_labels: window must be >= 0");
    if (labels.size() != mask.size()) throw ContractError("expand_labels: labels/mask size mismatch");
    std::vector<int> out(labels.size(), 0);
    int n = (int)labels.size();
    for (int i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        for (int j = std::max(0, i - window); j <= std::min(n - 1, i + window); ++j)
            if (mask[j] && labels[j]) { out[i] = 1; break; }
    }
    return out;
}

std::string SplitManifest::serialize() const {
    std::ostringstream out;
    out << "seed " << seed << "\n";
    for (const auto& id : train_ids) out << "train " << id << "\n";
    for (const auto& id : val_ids) out << "val " << id << "\n";
    return out.str();
}

SplitManifest SplitManifest::parse(const std::string& text) {
    SplitManifest m;
    std::istringstream in(text);
    std::string tag, value;
    while (in >> tag >> value) {
        if (tag == "seed")
            m.seed = std::stoull(value);
        else if (tag == "train")
            m.train_ids.push_back(value);
        else if (tag == "val")
            m.val_ids.push_back(value);
        else
            throw ParseError("split manifest: unknown tag '" + tag + "'");
    }
    return m;
}

SplitManifest split_dataset(const std::vector<std::string>& ids, uint64_t seed,
                            double train_fraction) {
    if (ids.empty()) throw ContractError("split_dataset: no ids");
    SplitManifest m;
    m.seed = seed;
    std::vector<std::string> shuffled = ids;
    // Fisher-Yates with mt19937_64 and modulo index draw; frozen for
    // reproducible manifests.
    std::mt19937_64 rng(seed);
    for (size_t i = shuffled.size() - 1; i > 0; --i) {
        size_t j = (size_t)(rng() % (i + 1));
        std::swap(shuffled[i], shuffled[j]);
    }
    size_t n_train = (size_t)std::ceil(train_fraction * (double)shuffled.size());
    n_train = std::min(n_train, shuffled.size());
    m.train_ids.assign(shuffled.begin(), shuffled.begin() + (long)n_train);
    m.val_ids.assign(shuffled.begin() + (long)n_train, shuffled.end());
    return m;
}

FeatureScheme parse_feature_scheme(const std::string& name) {
    if (name == "onehot") return FeatureScheme::onehot;
    if (name == "physchem") return FeatureScheme::physchem;
    if (name == "external") return FeatureScheme::external;
    throw ValidationError("unknown feature scheme '" + name + "'");
}

std::string feature_scheme_name(FeatureScheme scheme) {
    switch (scheme) {
        case FeatureScheme::onehot: return "onehot";
        case FeatureScheme::physchem: return "physchem";
        case FeatureScheme::external: return "external";
    }
    return "?";
}

int onehot_index(char residue) {
    static const std::string order = "ACDEFGHIKLMNPQRSTVWY";
    auto pos = order.find(residue);
    return pos == std::string::npos ? 20 : (int)pos;
}

namespace {

// Per-residue physicochemical descriptors, in raw units:
// hydropathy (Kyte-Doolittle), net charge at pH 7, polar flag, aromatic flag,
// molecular weight (Da), isoelectric point, side-chain volume (Å³).
struct PhyschemRow {
    double hydropathy, charge, polar, aromatic, mol_weight, pi, volume;
};

const PhyschemRow& physchem_row(char residue) {
    static const std::map<char, PhyschemRow> table = {
        {'A', {1.8, 0, 0, 0, 89.1, 6.00, 88.6}},   {'C', {2.5, 0, 0, 0, 121.2, 5.07, 108.5}},
        {'D', {-3.5, -1, 1, 0, 133.1, 2.77, 111.1}}, {'E', {-3.5, -1, 1, 0, 147.1, 3.22, 138.4}},
        {'F', {2.8, 0, 0, 1, 165.2, 5.48, 189.9}},  {'G', {-0.4, 0, 0, 0, 75.1, 5.97, 60.1}},
        {'H', {-3.2, 0.5, 1, 1, 155.2, 7.59, 153.2}}, {'I', {4.5, 0, 0, 0, 131.2, 6.02, 166.7}},
        {'K', {-3.9, 1, 1, 0, 146.2, 9.74, 168.6}}, {'L', {3.8, 0, 0, 0, 131.2, 5.98, 166.7}},
        {'M', {1.9, 0, 0, 0, 149.2, 5.74, 162.9}},  {'N', {-3.5, 0, 1, 0, 132.1, 5.41, 114.1}},
        {'P', {-1.6, 0, 0, 0, 115.1, 6.30, 112.7}}, {'Q', {-3.5, 0, 1, 0, 146.2, 5.65, 143.8}},
        {'R', {-4.5, 1, 1, 0, 174.2, 10.76, 173.4}}, {'S', {-0.8, 0, 1, 0, 105.1, 5.68, 89.0}},
        {'T', {-0.7, 0, 1, 0, 119.1, 5.60, 116.1}}, {'V', {4.2, 0, 0, 0, 117.1, 5.96, 140.0}},
        {'W', {-0.9, 0, 0, 1, 204.2, 5.89, 227.8}}, {'Y', {-1.3, 0, 1, 1, 181.2, 5.66, 193.6}},
        {'X', {0.0, 0, 0, 0, 136.9, 6.00, 141.0}}};
    auto it = table.find(residue);
    return it == table.end() ? table.at('X') : it->second;
}

std::vector<double> physchem_features(char residue) {
    const auto& r = physchem_row(residue);
    // Scales frozen: hydropathy /4.5, mol weight /204.2, pI /14, volume /227.8.
    return {r.hydropathy / 4.5, r.charge, r.polar, r.aromatic,
            r.mol_weight / 204.2, r.pi / 14.0, r.volume / 227.8};
}

} // namespace

EmbeddingTable load_external_embeddings(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("embeddings: empty file");
    if (line.rfind("D=", 0) != 0) throw ParseError("embeddings: expected 'D=<dim>' header");
    int dim = std::atoi(line.c_str() + 2);
    if (dim <= 0) throw ParseError("embeddings: invalid dimension '" + line + "'");

    EmbeddingTable table;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        int idx;
        if (!(row >> idx)) throw ParseError("embeddings line " + std::to_string(line_no) +
                                            ": missing residue index");
        std::vector<double> v;
        double x;
        while (row >> x) v.push_back(x);
        if ((int)v.size() != dim)
            throw ParseError("embeddings line " + std::to_string(line_no) + ": expected " +
                             std::to_string(dim) + " values, got " + std::to_string(v.size()));
        table[idx] = std::move(v);
    }
    return table;
}

std::string write_external_embeddings(const EmbeddingTable& table) {
    std::ostringstream out;
    size_t dim = table.empty() ? 0 : table.begin()->second.size();
    out << "D=" << dim << "\n";
    char buf[32];
    for (const auto& [idx, v] : table) {
        out << idx;
        for (double x : v) {
            std::snprintf(buf, sizeof buf, " %.9g", x);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

FeatureMatrix encode_features(const LabeledPair& pair, FeatureScheme scheme,
                              const EmbeddingTable* embeddings) {
    FeatureMatrix fm;
    fm.scheme = scheme;
    size_t real = pair.real_length();

    size_t dim;
    if (scheme == FeatureScheme::onehot) {
        dim = 21;
    } else if (scheme == FeatureScheme::physchem) {
        dim = 7;
    } else {
        if (!embeddings || embeddings->empty())
            throw ValidationError("encode_features: external scheme requires an embedding table");
        std::vector<int> missing;
        for (size_t i = 0; i < real; ++i)
            if (embeddings->find((int)i) == embeddings->end()) missing.push_back((int)i);
        if (!missing.empty()) {
            std::ostringstream msg;
            msg << "encode_features: embeddings missing residues";
            for (int i : missing) msg << " " << i;
            throw ValidationError(msg.str());
        }
        dim = embeddings->begin()->second.size();
    }

    fm.rows.assign(kProteinPad, std::vector<double>(dim, 0.0));
    fm.global_row.assign(dim, 0.0);
    for (size_t i = 0; i < real; ++i) {
        if (scheme == FeatureScheme::onehot) {
            fm.rows[i][(size_t)onehot_index(pair.protein_seq[i])] = 1.0;
        } else if (scheme == FeatureScheme::physchem) {
            fm.rows[i] = physchem_features(pair.protein_seq[i]);
        } else {
            fm.rows[i] = embeddings->at((int)i);
        }
        for (size_t d = 0; d < dim; ++d) fm.global_row[d] += fm.rows[i][d];
    }
    if (real > 0)
        for (auto& v : fm.global_row) v /= (double)real;
    return fm;
}

} // namespace geopep
