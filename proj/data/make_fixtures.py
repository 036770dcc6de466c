#!/usr/bin/env python3
"""Regenerates the shipped data fixtures (deterministic, seed 2024).

  micro_bundle/   30 small peptide-protein complexes. Interface residues are
                  hydrophobic (LIVFW), the rest polar, so one-hot features
                  carry a learnable signal.
  real_pdb/       12 full-format entries exercising the corners of the PDB
                  fixed-column format: multi-atom residues, altlocs,
                  insertion codes, hydrogens, waters, HETATM ligands,
                  multi-MODEL NMR entries, REMARK 2 / EXPDTA headers.
  spline_fixture.csv  1-D classification target y = [sin(3 pi x) > 0], which a
                  cubic spline basis represents directly.
"""

import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

HYDROPHOBIC = ["LEU", "ILE", "VAL", "PHE", "TRP"]
POLAR = ["SER", "ASP", "LYS", "GLN", "GLU", "ASN", "THR", "ARG", "GLY", "HIS"]


def atom_line(serial, name, altloc, resname, chain, seq, icode, x, y, z,
              occ=1.00, element="C", hetatm=False):
    padded = name if len(name) >= 4 else " " + name
    return "%-6s%5d %-4s%c%3s %c%4d%c   %8.3f%8.3f%8.3f%6.2f%6.2f          %2s\n" % (
        "HETATM" if hetatm else "ATOM", serial, padded, altloc, resname,
        chain, seq, icode, x, y, z, occ, 0.0, element)


def helix(n, rng, origin=(0.0, 0.0, 0.0), phase=0.0):
    """CA trace of an alpha-helix-like curve with mild noise."""
    pts = []
    for i in range(n):
        t = phase + i * math.radians(100.0)
        pts.append((origin[0] + 2.3 * math.cos(t) + rng.uniform(-0.2, 0.2),
                    origin[1] + 2.3 * math.sin(t) + rng.uniform(-0.2, 0.2),
                    origin[2] + 1.5 * i + rng.uniform(-0.2, 0.2)))
    return pts


def dist(a, b):
    return math.dist(a, b)


def backbone_atoms(ca, nxt):
    """Approximate N, C, O placements around a CA, pointing toward `nxt`."""
    dx = [nxt[i] - ca[i] for i in range(3)]
    norm = math.sqrt(sum(v * v for v in dx)) or 1.0
    u = [v / norm for v in dx]
    n = [ca[i] - 1.46 * u[i] for i in range(3)]
    c = [ca[i] + 1.52 * u[i] for i in range(3)]
    o = [c[0] + 0.6, c[1] + 0.9, c[2] - 0.4]
    return n, c, o


def write_micro_bundle(rng):
    out_dir = os.path.join(HERE, "micro_bundle")
    os.makedirs(out_dir, exist_ok=True)
    for k in range(30):
        n_prot = rng.randint(52, 68)  # > 50 so the protein cannot pass as a peptide
        n_pep = rng.randint(11, 14)
        prot = helix(n_prot, rng)
        # peptide runs alongside a random stretch of the protein
        anchor = rng.randint(0, n_prot - n_pep)
        pep = []
        side = (4.8 + rng.uniform(0.0, 0.8), 1.0 + rng.uniform(-0.5, 0.5))
        for i in range(n_pep):
            base = prot[anchor + i]
            pep.append((base[0] + side[0], base[1] + side[1],
                        base[2] + rng.uniform(-0.3, 0.3)))

        lines = ["HEADER    SYNTHETIC COMPLEX\n",
                 "EXPDTA    X-RAY DIFFRACTION\n",
                 "REMARK   2 RESOLUTION.    1.80 ANGSTROMS.\n"]
        serial = 1
        for i, ca in enumerate(prot):
            contact = any(dist(ca, q) <= 6.0 for q in pep)
            resname = rng.choice(HYDROPHOBIC if contact else POLAR)
            lines.append(atom_line(serial, "CA", " ", resname, "A", i + 1, " ", *ca))
            serial += 1
        lines.append("TER\n")
        for i, ca in enumerate(pep):
            lines.append(atom_line(serial, "CA", " ", "ALA", "P", i + 1, " ", *ca))
            serial += 1
        lines.append("TER\nEND\n")
        with open(os.path.join(out_dir, "cplx%02d.pdb" % k), "w") as f:
            f.writelines(lines)


def write_real_pdb(rng):
    out_dir = os.path.join(HERE, "real_pdb")
    os.makedirs(out_dir, exist_ok=True)
    for k in range(12):
        n_prot = rng.randint(30, 60)
        n_pep = rng.randint(12, 20)
        nmr = k % 4 == 3
        prot = helix(n_prot, rng)
        anchor = rng.randint(0, n_prot - n_pep)
        pep = [(p[0] + 5.0, p[1] + 1.2, p[2] + rng.uniform(-0.4, 0.4))
               for p in prot[anchor:anchor + n_pep]]

        lines = ["HEADER    PEPTIDE COMPLEX                         01-JAN-20   9X%02d\n" % k]
        if nmr:
            lines.append("EXPDTA    SOLUTION NMR\n")
        else:
            lines.append("EXPDTA    X-RAY DIFFRACTION\n")
            lines.append("REMARK   2 RESOLUTION.    %4.2f ANGSTROMS.\n" % rng.uniform(1.2, 2.4))
        if nmr:
            lines.append("MODEL        1\n")

        serial = 1

        def emit_chain(chain, cas, pep_chain=False):
            nonlocal serial
            for i, ca in enumerate(cas):
                resname = rng.choice(HYDROPHOBIC + POLAR) if not pep_chain else \
                    rng.choice(["ALA", "GLY", "PRO", "TYR", "MET", "CYS"])
                icode = "A" if (not pep_chain and i == 5 and k % 3 == 0) else " "
                nxt = cas[i + 1] if i + 1 < len(cas) else (ca[0] + 1, ca[1], ca[2])
                n, c, o = backbone_atoms(ca, nxt)
                if i == 2 and not pep_chain:
                    # altloc pair on the CA, occupancies 0.65 / 0.35
                    lines.append(atom_line(serial, "CA", "A", resname, chain, i + 1, icode,
                                           *ca, occ=0.65))
                    serial += 1
                    lines.append(atom_line(serial, "CA", "B", resname, chain, i + 1, icode,
                                           ca[0] + 0.4, ca[1], ca[2], occ=0.35))
                    serial += 1
                else:
                    lines.append(atom_line(serial, "CA", " ", resname, chain, i + 1, icode, *ca))
                    serial += 1
                lines.append(atom_line(serial, "N", " ", resname, chain, i + 1, icode, *n,
                                       element="N"))
                serial += 1
                lines.append(atom_line(serial, "C", " ", resname, chain, i + 1, icode, *c))
                serial += 1
                lines.append(atom_line(serial, "O", " ", resname, chain, i + 1, icode, *o,
                                       element="O"))
                serial += 1
                if resname != "GLY":
                    cb = (ca[0] - 0.8, ca[1] - 1.1, ca[2] + 0.5)
                    lines.append(atom_line(serial, "CB", " ", resname, chain, i + 1, icode, *cb))
                    serial += 1
                if i % 7 == 0:
                    # hydrogen, must be ignored by consumers
                    lines.append(atom_line(serial, "HA", " ", resname, chain, i + 1, icode,
                                           ca[0] + 0.3, ca[1] + 0.3, ca[2], element="H"))
                    serial += 1

        emit_chain("A", prot)
        lines.append("TER\n")
        emit_chain("P", pep, pep_chain=True)
        lines.append("TER\n")
        # solvent + a ligand, both HETATM
        for w in range(3):
            lines.append(atom_line(serial, "O", " ", "HOH", "W", w + 1, " ",
                                   30.0 + w, 30.0, 5.0 * w, element="O", hetatm=True))
            serial += 1
        lines.append(atom_line(serial, "ZN", " ", " ZN", "Z", 1, " ", -20.0, -20.0, 0.0,
                               element="ZN", hetatm=True))
        serial += 1
        if nmr:
            lines.append("ENDMDL\nMODEL        2\n")
            lines.append(atom_line(1, "CA", " ", "ALA", "A", 1, " ", 99.0, 99.0, 99.0))
            lines.append("ENDMDL\n")
        lines.append("END\n")
        with open(os.path.join(out_dir, "9x%02d.pdb" % k), "w") as f:
            f.writelines(lines)


def write_spline_fixture(rng):
    rows = ["x,label\n"]
    for _ in range(400):
        x = rng.uniform(-1.0, 1.0)
        rows.append("%.6f,%d\n" % (x, 1 if math.sin(3.0 * math.pi * x) > 0.0 else 0))
    with open(os.path.join(HERE, "spline_fixture.csv"), "w") as f:
        f.writelines(rows)


def main():
    rng = random.Random(2024)
    write_micro_bundle(rng)
    write_real_pdb(rng)
    write_spline_fixture(rng)


if __name__ == "__main__":
    main()
