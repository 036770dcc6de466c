#include "geopep/structio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace geopep {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string field(const std::string& line, size_t col_begin, size_t col_end) {
    // 1-based inclusive PDB column convention.
    if (line.size() < col_begin) return "";
    size_t len = std::min(col_end, line.size()) - col_begin + 1;
    return line.substr(col_begin - 1, len);
}

double parse_coord(const std::string& raw, int line_no, const char* what) {
    std::string s = trim(raw);
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": malformed " + what +
                         " coordinate field '" + s + "'");
    }
}

std::string guess_element(const std::string& line, const std::string& atom_name) {
    std::string elem = trim(field(line, 77, 78));
    if (!elem.empty()) {
        for (auto& c : elem) c = (char)std::toupper((unsigned char)c);
        return elem;
    }
    // Fall back to the atom name: first alphabetic character, two-letter
    // element only when the name starts in column 13 (e.g. "FE  ").
    for (char c : atom_name) {
        if (std::isalpha((unsigned char)c)) return std::string(1, (char)std::toupper((unsigned char)c));
    }
    return "";
}

bool altloc_wins(const Atom& challenger, const Atom& incumbent) {
    if (challenger.occupancy != incumbent.occupancy)
        return challenger.occupancy > incumbent.occupancy;
    auto rank = [](char a) { return a == ' ' ? 0 : (a == 'A' ? 1 : 2 + (int)a); };
    return rank(challenger.altloc) < rank(incumbent.altloc);
}

} // namespace

Vec3 Residue::mass_center() const {
    Vec3 sum;
    for (const auto& a : atoms) sum += a.coord;
    return sum / (double)atoms.size();
}

char three_to_one(const std::string& resname) {
    static const std::map<std::string, char> table = {
        {"ALA", 'A'}, {"ARG", 'R'}, {"ASN", 'N'}, {"ASP", 'D'}, {"CYS", 'C'},
        {"GLN", 'Q'}, {"GLU", 'E'}, {"GLY", 'G'}, {"HIS", 'H'}, {"ILE", 'I'},
        {"LEU", 'L'}, {"LYS", 'K'}, {"MET", 'M'}, {"PHE", 'F'}, {"PRO", 'P'},
        {"SER", 'S'}, {"THR", 'T'}, {"TRP", 'W'}, {"TYR", 'Y'}, {"VAL", 'V'}};
    auto it = table.find(resname);
    return it == table.end() ? 'X' : it->second;
}

std::string Chain::sequence() const {
    std::string s;
    s.reserve(residues.size());
    for (const auto& r : residues) s.push_back(three_to_one(r.name));
    return s;
}

const Chain* Complex::find_chain(char id) const {
    for (const auto& c : chains)
        if (c.id == id) return &c;
    return nullptr;
}

Complex parse_pdb(const std::string& text, const std::string& pdb_id) {
    Complex cx;
    cx.pdb_id = pdb_id;

    struct ResKey {
        char chain;
        int seq;
        char icode;
        auto operator<=>(const ResKey&) const = default;
    };
    // chain -> residue key -> (atom name -> best altloc copy)
    std::map<char, std::map<ResKey, std::map<std::string, Atom>>> chains;
    std::map<char, std::map<ResKey, std::string>> resnames;
    std::vector<char> chain_order;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool in_first_model = true;
    size_t atom_records = 0;

    while (std::getline(in, line)) {
        ++line_no;
        std::string rec = field(line, 1, 6);
        if (rec.rfind("HEADER", 0) == 0 && cx.pdb_id.empty()) {
            std::string id = trim(field(line, 63, 66));
            if (!id.empty()) cx.pdb_id = id;
        } else if (rec.rfind("EXPDTA", 0) == 0) {
            std::string m = line.substr(10);
            if (m.find("X-RAY") != std::string::npos)
                cx.method = ExperimentMethod::xray;
            else if (m.find("NMR") != std::string::npos)
                cx.method = ExperimentMethod::nmr;
            else
                cx.method = ExperimentMethod::other;
        } else if (rec.rfind("REMARK", 0) == 0 && trim(field(line, 8, 10)) == "2") {
            auto pos = line.find("RESOLUTION.");
            if (pos != std::string::npos) {
                std::istringstream rs(line.substr(pos + 11));
                double r;
                if (rs >> r) cx.resolution = r;
            }
        } else if (rec.rfind("ENDMDL", 0) == 0) {
            in_first_model = false;
        } else if ((rec.rfind("ATOM", 0) == 0 || rec.rfind("HETATM", 0) == 0) && in_first_model) {
            ++atom_records;
            bool hetero = rec.rfind("HETATM", 0) == 0;
            std::string resname = trim(field(line, 18, 20));
            if (hetero) continue; // waters and ligands are excluded
            std::string atom_name_raw = field(line, 13, 16);
            std::string atom_name = trim(atom_name_raw);
            std::string element = guess_element(line, atom_name_raw);
            if (element == "H" || element == "D") continue;
            if (resname == "HOH") continue;

            Atom a;
            a.serial = std::atoi(field(line, 7, 11).c_str());
            a.name = atom_name;
            a.element = element;
            a.altloc = line.size() >= 17 ? line[16] : ' ';
            a.coord = {parse_coord(field(line, 31, 38), line_no, "x"),
                       parse_coord(field(line, 39, 46), line_no, "y"),
                       parse_coord(field(line, 47, 54), line_no, "z")};
            std::string occ = trim(field(line, 55, 60));
            a.occupancy = occ.empty() ? 1.0 : std::atof(occ.c_str());
            a.is_hetero = hetero;

            char chain_id = line.size() >= 22 ? line[21] : ' ';
            char icode = line.size() >= 27 ? line[26] : ' ';
            int seq = std::atoi(field(line, 23, 26).c_str());
            ResKey key{chain_id, seq, icode};

            if (chains.find(chain_id) == chains.end()) chain_order.push_back(chain_id);
            auto& slot = chains[chain_id][key][a.name];
            if (slot.name.empty() || altloc_wins(a, slot)) slot = a;
            resnames[chain_id][key] = resname;
        }
    }

    if (atom_records == 0) throw ParseError("empty structure: no ATOM records found");

    for (char cid : chain_order) {
        Chain chain;
        chain.id = cid;
        for (auto& [key, atom_map] : chains[cid]) {
            Residue r;
            r.seq_id = key.seq;
            r.insertion_code = key.icode;
            r.name = resnames[cid][key];
            for (auto& [name, atom] : atom_map) r.atoms.push_back(atom);
            if (!r.atoms.empty()) chain.residues.push_back(std::move(r));
        }
        if (!chain.residues.empty()) cx.chains.push_back(std::move(chain));
    }
    return cx;
}

std::string write_predictions(const std::vector<PredictionInstance>& instances) {
    std::ostringstream out;
    out << "pdb_id,protein_chain,peptide_chain,res_seq,icode,probability,label\n";
    char buf[32];
    for (const auto& inst : instances) {
        if (inst.probabilities.size() != inst.res_seq.size() ||
            (!inst.labels.empty() && inst.labels.size() != inst.res_seq.size()))
            throw ContractError("write_predictions: probability/residue length mismatch for " +
                                inst.pdb_id);
        for (size_t i = 0; i < inst.res_seq.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.6f", inst.probabilities[i]);
            out << inst.pdb_id << ',' << inst.protein_chain << ',' << inst.peptide_chain << ','
                << inst.res_seq[i] << ',' << (inst.icode[i] == ' ' ? '_' : inst.icode[i]) << ','
                << buf << ',';
            if (!inst.labels.empty()) out << inst.labels[i];
            out << '\n';
        }
    }
    return out.str();
}

PredictionTable read_predictions(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("predictions CSV: empty file");
    std::string header = trim(line);
    bool has_label = header == "pdb_id,protein_chain,peptide_chain,res_seq,icode,probability,label";
    if (!has_label && header != "pdb_id,protein_chain,peptide_chain,res_seq,icode,probability")
        throw ParseError("predictions CSV: unexpected header '" + header + "'");

    PredictionTable table;
    table.has_labels = has_label;
    std::set<std::tuple<std::string, char, int, char>> seen;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.push_back("");
        size_t expected = has_label ? 7 : 6;
        if (cells.size() != expected)
            throw ParseError("predictions CSV line " + std::to_string(line_no) + ": expected " +
                             std::to_string(expected) + " fields, got " + std::to_string(cells.size()));
        PredictionRow r;
        r.pdb_id = cells[0];
        r.protein_chain = cells[1].empty() ? ' ' : cells[1][0];
        r.peptide_chain = cells[2].empty() ? ' ' : cells[2][0];
        r.res_seq = std::atoi(cells[3].c_str());
        r.icode = (cells[4].empty() || cells[4] == "_") ? ' ' : cells[4][0];
        r.probability = std::atof(cells[5].c_str());
        if (r.probability < 0.0 || r.probability > 1.0)
            throw ValidationError("predictions CSV line " + std::to_string(line_no) +
                                  ": probability " + cells[5] + " outside [0,1]");
        if (has_label && !trim(cells[6]).empty()) r.label = std::atoi(cells[6].c_str());
        auto key = std::make_tuple(r.pdb_id, r.protein_chain, r.res_seq, r.icode);
        if (!seen.insert(key).second)
            throw ValidationError("predictions CSV line " + std::to_string(line_no) +
                                  ": duplicate key " + r.pdb_id + "/" + std::string(1, r.protein_chain) +
                                  "/" + std::to_string(r.res_seq));
        table.rows.push_back(r);
    }
    return table;
}

std::string write_structure_cache(const Complex& complex) {
    std::ostringstream out;
    char buf[96];
    for (const auto& chain : complex.chains)
        for (const auto& res : chain.residues)
            for (const auto& atom : res.atoms) {
                std::snprintf(buf, sizeof buf, "%c %d %c %s %s %.3f %.3f %.3f\n", chain.id,
                              res.seq_id, res.insertion_code == ' ' ? '_' : res.insertion_code,
                              res.name.c_str(), atom.name.c_str(), atom.coord.x, atom.coord.y,
                              atom.coord.z);
                out << buf;
            }
    return out.str();
}

Complex read_structure_cache(const std::string& text, const std::string& pdb_id) {
    Complex cx;
    cx.pdb_id = pdb_id;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::istringstream row(line);
        char chain_id, icode;
        int seq;
        std::string resname, atomname;
        double x, y, z;
        if (!(row >> chain_id >> seq >> icode >> resname >> atomname >> x >> y >> z))
            throw ParseError("structure cache line " + std::to_string(line_no) + ": malformed record");
        if (icode == '_') icode = ' ';

        if (cx.chains.empty() || cx.chains.back().id != chain_id) {
            Chain c;
            c.id = chain_id;
            cx.chains.push_back(c);
        }
        auto& chain = cx.chains.back();
        if (chain.residues.empty() || chain.residues.back().seq_id != seq ||
            chain.residues.back().insertion_code != icode) {
            Residue r;
            r.seq_id = seq;
            r.insertion_code = icode;
            r.name = resname;
            chain.residues.push_back(r);
        }
        Atom a;
        a.name = atomname;
        a.element = atomname.empty() ? "" : std::string(1, atomname[0]);
        a.coord = {x, y, z};
        cx.chains.back().residues.back().atoms.push_back(a);
    }
    return cx;
}

} // namespace geopep
