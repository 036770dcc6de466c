#pragma once

#include <map>
#include <string>
#include <vector>

#include "geopep/geometry.hpp"
#include "geopep/structio.hpp"

namespace geopep {

constexpr int kPeptideMinLength = 11;  // "exceeding 10 residues"
constexpr int kPeptideMaxLength = 50;
constexpr int kProteinMaxLength = 499; // "less than 500 residues"
constexpr int kPeptidePad = 50;
constexpr int kProteinPad = 500;
constexpr double kDefaultContactCutoff = 6.0; // Å, inclusive
constexpr double kMaxXrayResolution = 2.5;    // Å

struct FilterRules {
    int peptide_min = kPeptideMinLength;
    int peptide_max = kPeptideMaxLength;
    int protein_max = kProteinMaxLength;
    double max_resolution = kMaxXrayResolution;
};

struct ChainPair {
    const Complex* complex = nullptr;
    char peptide_chain = ' ';
    char protein_chain = ' ';
};

struct FilterOutcome {
    std::vector<ChainPair> pairs;
    // rule name -> count of (complex, chain pair) candidates it rejected
    std::map<std::string, size_t> exclusion_counts;
};

/// Emit every (peptide chain, protein chain) combination passing the length
/// and resolution rules. NMR entries skip the resolution check.
FilterOutcome filter_complexes(const std::vector<Complex>& complexes,
                               const FilterRules& rules = {});

struct LabeledPair {
    std::string pdb_id;
    char peptide_chain = ' ';
    char protein_chain = ' ';
    std::string peptide_seq; // unpadded
    std::string protein_seq; // unpadded
    std::vector<int> labels; // length kProteinPad, 0 at masked positions
    std::vector<int> mask;   // 1 = real residue
    std::vector<Vec3> mass_centers;               // per real protein residue
    std::vector<std::vector<Vec3>> residue_atoms; // heavy atoms per real protein residue
    std::vector<int> res_seq;                     // PDB numbering per real residue
    std::vector<char> icode;

    size_t real_length() const { return protein_seq.size(); }
};

/// Per-residue binary interface labels: 1 iff any heavy atom of the protein
/// residue is within `cutoff` (inclusive) of any peptide heavy atom.
LabeledPair label_interface(const ChainPair& pair, double cutoff = kDefaultContactCutoff);

/// Dilate 1-labels along the sequence by `window` positions, restricted to
/// real (mask = 1) positions.
std::vector<int> expand_labels(const std::vector<int>& labels, const std::vector<int>& mask,
                               int window);

struct SplitManifest {
    uint64_t seed = 0;
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;

    std::string serialize() const;
    static SplitManifest parse(const std::string& text);
};

/// Deterministic seeded shuffle (mt19937_64 + Fisher-Yates); the first
/// ceil(train_fraction * n) ids go to train.
SplitManifest split_dataset(const std::vector<std::string>& ids, uint64_t seed,
                            double train_fraction = 0.9);

enum class FeatureScheme { onehot, physchem, external };

FeatureScheme parse_feature_scheme(const std::string& name);
std::string feature_scheme_name(FeatureScheme scheme);

struct FeatureMatrix {
    std::vector<std::vector<double>> rows; // kProteinPad rows, masked rows zero
    std::vector<double> global_row;        // mean over real residue rows
    FeatureScheme scheme = FeatureScheme::onehot;

    size_t dim() const { return global_row.size(); }
};

/// External embeddings: residue index (0-based over real residues) -> vector.
using EmbeddingTable = std::map<int, std::vector<double>>;

/// Parse "D=<dim>" header then one "res_index v1 ... vD" line per residue.
EmbeddingTable load_external_embeddings(const std::string& text);
std::string write_external_embeddings(const EmbeddingTable& table);

/// One-hot: D = 21 (ACDEFGHIKLMNPQRSTVWY + X, alphabetical). Physchem: D = 7.
/// External: D from the table, which must cover every real residue.
FeatureMatrix encode_features(const LabeledPair& pair, FeatureScheme scheme,
                              const EmbeddingTable* embeddings = nullptr);

/// Alphabetical one-hot index of a one-letter residue code ('X' and unknowns
/// map to index 20).
int onehot_index(char residue);

} // namespace geopep
