#include "doctest.h"

#include "geopep/structio.hpp"
#include "test_util.hpp"

using namespace geopep;
using namespace geopep::testutil;

TEST_CASE("single ATOM line parses into one chain/residue/atom") {
    auto text = atom_line(1, "CA", ' ', "ALA", 'A', 1, ' ', 1.0, 2.0, 3.0);
    Complex cx = parse_pdb(text, "test");
    REQUIRE(cx.chains.size() == 1);
    REQUIRE(cx.chains[0].residues.size() == 1);
    REQUIRE(cx.chains[0].residues[0].atoms.size() == 1);
    const Atom& a = cx.chains[0].residues[0].atoms[0];
    CHECK(a.coord.x == doctest::Approx(1.0));
    CHECK(a.coord.y == doctest::Approx(2.0));
    CHECK(a.coord.z == doctest::Approx(3.0));
    CHECK(cx.chains[0].sequence() == "A");
}

TEST_CASE("two chains keep their residue counts") {
    std::string text;
    int serial = 1;
    for (int i = 0; i < 3; ++i)
        text += atom_line(serial++, "CA", ' ', "GLY", 'A', i + 1, ' ', i * 4.0, 0, 0);
    for (int i = 0; i < 2; ++i)
        text += atom_line(serial++, "CA", ' ', "LEU", 'B', i + 1, ' ', i * 4.0, 10, 0);
    Complex cx = parse_pdb(text);
    REQUIRE(cx.chains.size() == 2);
    CHECK(cx.chains[0].id == 'A');
    CHECK(cx.chains[0].residues.size() == 3);
    CHECK(cx.chains[1].id == 'B');
    CHECK(cx.chains[1].residues.size() == 2);
}

TEST_CASE("malformed coordinate raises a parse error naming the line") {
    auto good = atom_line(1, "CA", ' ', "ALA", 'A', 1, ' ', 1, 2, 3);
    auto bad = atom_line(2, "CB", ' ', "ALA", 'A', 1, ' ', 9, 9, 9);
    bad.replace(30, 8, "   abc  "); // x column
    try {
        parse_pdb(good + bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("zero ATOM records is an empty-structure error") {
    CHECK_THROWS_AS(parse_pdb("HEADER    TEST\nEND\n"), ParseError);
}

TEST_CASE("hydrogens, waters and HETATM ligands are excluded") {
    std::string text;
    text += atom_line(1, "CA", ' ', "ALA", 'A', 1, ' ', 0, 0, 0, 1.0, "C");
    text += atom_line(2, "HA", ' ', "ALA", 'A', 1, ' ', 0, 1, 0, 1.0, "H");
    text += atom_line(3, "O", ' ', "HOH", 'W', 1, ' ', 5, 5, 5, 1.0, "O", true);
    text += atom_line(4, "FE", ' ', "HEM", 'X', 1, ' ', 9, 9, 9, 1.0, "FE", true);
    Complex cx = parse_pdb(text);
    REQUIRE(cx.chains.size() == 1);
    CHECK(cx.chains[0].residues[0].atoms.size() == 1);
}

TEST_CASE("altloc duplicates keep the highest occupancy, ties prefer blank then A") {
    std::string text;
    text += atom_line(1, "CA", 'A', "ALA", 'A', 1, ' ', 1, 0, 0, 0.4);
    text += atom_line(2, "CA", 'B', "ALA", 'A', 1, ' ', 2, 0, 0, 0.6);
    Complex cx = parse_pdb(text);
    CHECK(cx.chains[0].residues[0].atoms[0].coord.x == doctest::Approx(2.0));

    text = atom_line(1, "CA", 'B', "ALA", 'A', 1, ' ', 2, 0, 0, 0.5) +
           atom_line(2, "CA", 'A', "ALA", 'A', 1, ' ', 1, 0, 0, 0.5);
    cx = parse_pdb(text);
    CHECK(cx.chains[0].residues[0].atoms[0].coord.x == doctest::Approx(1.0));
}

TEST_CASE("only the first MODEL of NMR entries is kept") {
    std::string text = "MODEL        1\n";
    text += atom_line(1, "CA", ' ', "ALA", 'A', 1, ' ', 0, 0, 0);
    text += "ENDMDL\nMODEL        2\n";
    text += atom_line(1, "CA", ' ', "ALA", 'A', 1, ' ', 50, 0, 0);
    text += atom_line(2, "CA", ' ', "GLY", 'A', 2, ' ', 54, 0, 0);
    text += "ENDMDL\n";
    Complex cx = parse_pdb(text);
    REQUIRE(cx.chains[0].residues.size() == 1);
    CHECK(cx.chains[0].residues[0].atoms[0].coord.x == doctest::Approx(0.0));
}

TEST_CASE("REMARK 2 resolution and EXPDTA method are read") {
    std::string text =
        "EXPDTA    X-RAY DIFFRACTION\n"
        "REMARK   2 RESOLUTION.    1.74 ANGSTROMS.\n";
    text += atom_line(1, "CA", ' ', "ALA", 'A', 1, ' ', 0, 0, 0);
    Complex cx = parse_pdb(text);
    REQUIRE(cx.resolution.has_value());
    CHECK(*cx.resolution == doctest::Approx(1.74));
    CHECK(cx.method == ExperimentMethod::xray);
}

TEST_CASE("residues ordered by (seq_id, insertion_code)") {
    std::string text;
    text += atom_line(1, "CA", ' ', "ALA", 'A', 2, 'B', 0, 0, 0);
    text += atom_line(2, "CA", ' ', "GLY", 'A', 2, 'A', 1, 0, 0);
    text += atom_line(3, "CA", ' ', "LEU", 'A', 1, ' ', 2, 0, 0);
    Complex cx = parse_pdb(text);
    REQUIRE(cx.chains[0].residues.size() == 3);
    CHECK(cx.chains[0].sequence() == "LGA");
}

TEST_CASE("mass center is the unweighted heavy-atom mean") {
    std::string text;
    text += atom_line(1, "CA", ' ', "ALA", 'A', 1, ' ', 0, 0, 0);
    text += atom_line(2, "CB", ' ', "ALA", 'A', 1, ' ', 2, 4, 6);
    Complex cx = parse_pdb(text);
    Vec3 mc = cx.chains[0].residues[0].mass_center();
    CHECK(mc.x == doctest::Approx(1.0));
    CHECK(mc.y == doctest::Approx(2.0));
    CHECK(mc.z == doctest::Approx(3.0));
}

TEST_CASE("predictions CSV writes rows in residue order") {
    PredictionInstance inst;
    inst.pdb_id = "abcd";
    inst.protein_chain = 'A';
    inst.peptide_chain = 'P';
    inst.res_seq = {5, 6};
    inst.icode = {' ', ' '};
    inst.labels = {1, 0};
    inst.probabilities = {0.25, 0.75};
    auto csv = write_predictions({inst});
    CHECK(csv == "pdb_id,protein_chain,peptide_chain,res_seq,icode,probability,label\n"
                 "abcd,A,P,5,_,0.250000,1\n"
                 "abcd,A,P,6,_,0.750000,0\n");
}

TEST_CASE("empty pair list gives a header-only file") {
    auto csv = write_predictions({});
    CHECK(csv == "pdb_id,protein_chain,peptide_chain,res_seq,icode,probability,label\n");
}

TEST_CASE("predictions round-trip to 1e-6") {
    PredictionInstance inst;
    inst.pdb_id = "1xyz";
    inst.protein_chain = 'A';
    inst.peptide_chain = 'P';
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 40; ++i) {
        inst.res_seq.push_back(i + 1);
        inst.icode.push_back(' ');
        inst.labels.push_back(i % 3 == 0);
        inst.probabilities.push_back(u(rng));
    }
    auto table = read_predictions(write_predictions({inst}));
    REQUIRE(table.rows.size() == 40);
    for (int i = 0; i < 40; ++i) {
        CHECK(table.rows[(size_t)i].probability ==
              doctest::Approx(inst.probabilities[(size_t)i]).epsilon(1e-6));
        CHECK(*table.rows[(size_t)i].label == inst.labels[(size_t)i]);
    }
}

TEST_CASE("prediction probability outside [0,1] is rejected") {
    std::string csv = "pdb_id,protein_chain,peptide_chain,res_seq,icode,probability,label\n"
                      "1abc,A,P,1,_,1.500000,0\n";
    CHECK_THROWS_AS(read_predictions(csv), ValidationError);
}

TEST_CASE("duplicate prediction keys are rejected") {
    std::string csv = "pdb_id,protein_chain,peptide_chain,res_seq,icode,probability,label\n"
                      "1abc,A,P,1,_,0.500000,0\n"
                      "1abc,A,P,1,_,0.600000,0\n";
    CHECK_THROWS_AS(read_predictions(csv), ValidationError);
}

TEST_CASE("missing label column is accepted") {
    std::string csv = "pdb_id,protein_chain,peptide_chain,res_seq,icode,probability\n"
                      "1abc,A,P,1,_,0.500000\n";
    auto table = read_predictions(csv);
    CHECK_FALSE(table.has_labels);
    REQUIRE(table.rows.size() == 1);
    CHECK_FALSE(table.rows[0].label.has_value());
}

TEST_CASE("length mismatch between probabilities and residues errors") {
    PredictionInstance inst;
    inst.pdb_id = "1abc";
    inst.res_seq = {1, 2};
    inst.icode = {' ', ' '};
    inst.probabilities = {0.5};
    CHECK_THROWS_AS(write_predictions({inst}), ContractError);
}

TEST_CASE("structure cache round-trips: parse -> serialize -> parse fixpoint") {
    std::string text;
    int serial = 1;
    std::mt19937_64 rng(3);
    text += ca_chain('A', random_points(rng, 6, 20.0), serial, "LYS");
    text += ca_chain('B', random_points(rng, 4, 20.0), serial, "TRP");
    Complex cx = parse_pdb(text, "xyz");

    std::string cache1 = write_structure_cache(cx);
    Complex cx2 = read_structure_cache(cache1, "xyz");
    std::string cache2 = write_structure_cache(cx2);
    CHECK(cache1 == cache2);
    REQUIRE(cx2.chains.size() == 2);
    CHECK(cx2.chains[0].residues.size() == 6);
    CHECK(cx2.chains[1].sequence() == "WWWW");
}

TEST_CASE("repeated parses give identical residue ordering") {
    std::string text;
    int serial = 1;
    std::mt19937_64 rng(5);
    text += ca_chain('A', random_points(rng, 12, 30.0), serial);
    Complex a = parse_pdb(text);
    Complex b = parse_pdb(text);
    CHECK(write_structure_cache(a) == write_structure_cache(b));
}
