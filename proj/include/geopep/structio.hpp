#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geopep/errors.hpp"
#include "geopep/vec3.hpp"

namespace geopep {

struct Atom {
    int serial = 0;
    std::string name;    // PDB atom name, columns 13-16, trimmed
    std::string element; // upper-case element symbol
    Vec3 coord;
    double occupancy = 1.0;
    char altloc = ' ';
    bool is_hetero = false;
};

struct Residue {
    int seq_id = 0;
    char insertion_code = ' ';
    std::string name; // 3-letter code
    std::vector<Atom> atoms;

    /// Unweighted mean of heavy-atom coordinates.
    Vec3 mass_center() const;
};

struct Chain {
    char id = ' ';
    std::vector<Residue> residues;

    /// One-letter sequence; unknown 3-letter codes map to 'X'.
    std::string sequence() const;
};

enum class ExperimentMethod { xray, nmr, other };

struct Complex {
    std::string pdb_id;
    std::vector<Chain> chains;
    std::optional<double> resolution;
    std::optional<ExperimentMethod> method;

    const Chain* find_chain(char id) const;
};

/// Map a 3-letter residue code to its one-letter code, 'X' if unknown.
char three_to_one(const std::string& resname);

/// Parse fixed-column PDB text. Hydrogens (H/D), waters (HOH), and HETATM
/// ligand records are dropped; for altloc duplicates the highest-occupancy
/// copy wins (ties: blank altloc, then 'A'). Only the first MODEL of
/// multi-model files is kept. Resolution is read from REMARK 2 when present.
Complex parse_pdb(const std::string& text, const std::string& pdb_id = "");

/// One prediction row keyed by (pdb_id, chain, res_seq, icode).
struct PredictionRow {
    std::string pdb_id;
    char protein_chain = ' ';
    char peptide_chain = ' ';
    int res_seq = 0;
    char icode = ' ';
    double probability = 0.0;
    std::optional<int> label;
};

struct PredictionTable {
    std::vector<PredictionRow> rows;
    bool has_labels = false;
};

struct PredictionInstance {
    std::string pdb_id;
    char protein_chain = ' ';
    char peptide_chain = ' ';
    // Aligned per real protein residue, in residue order.
    std::vector<int> res_seq;
    std::vector<char> icode;
    std::vector<int> labels;
    std::vector<double> probabilities;
};

/// Serialize predictions as CSV with header
/// pdb_id,protein_chain,peptide_chain,res_seq,icode,probability,label.
/// Probabilities are printed with 6 decimals; row order is deterministic
/// (instance order, then residue order).
std::string write_predictions(const std::vector<PredictionInstance>& instances);

/// Parse the write_predictions schema. The label column is optional.
PredictionTable read_predictions(const std::string& csv_text);

/// Internal structure cache: one atom per line,
/// "chain res_seq icode resname atomname x y z". Parses back to the same
/// chains/residues/atom coordinates (parse -> serialize -> parse fixpoint).
std::string write_structure_cache(const Complex& complex);
Complex read_structure_cache(const std::string& text, const std::string& pdb_id = "");

} // namespace geopep
