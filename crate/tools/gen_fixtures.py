"""Regenerate the FCIDUMP fixtures under crates/core/fixtures.

Requires pyscf. Writes, per molecule:
  <name>.fcidump        RHF canonical-MO integrals (chemist notation)
  <name>.rotation       MO -> Loewdin-orthogonalized AO rotation (row-major)
  <name>.reference.json RHF and FCI energies from pyscf for cross-checking
"""
import json
import os

import numpy as np
from pyscf import fci, gto, scf
from pyscf.tools import fcidump

HERE = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "fixtures")

MOLECULES = {
    "h2_sto6g_0.76": "H 0 0 0; H 0 0 0.76",
    "h4_chain_sto6g_1.0": "H 0 0 0; H 0 0 1.0; H 0 0 2.0; H 0 0 3.0",
}


def main():
    for name, atoms in MOLECULES.items():
        mol = gto.M(atom=atoms, basis="sto-6g", unit="angstrom", verbose=0)
        mf = scf.RHF(mol)
        mf.conv_tol = 1e-12
        e_hf = mf.kernel()
        fcidump.from_scf(mf, os.path.join(HERE, f"{name}.fcidump"), tol=1e-15)
        e_fci, _ = fci.FCI(mf).kernel()

        s = mol.intor("int1e_ovlp")
        w, v = np.linalg.eigh(s)
        s_half = v @ np.diag(np.sqrt(w)) @ v.T
        # columns: MO coefficients in the orthogonalized AO basis
        u = s_half @ mf.mo_coeff
        with open(os.path.join(HERE, f"{name}.rotation"), "w") as f:
            for row in u:
                f.write(" ".join(f"{x: .17e}" for x in row) + "\n")

        with open(os.path.join(HERE, f"{name}.reference.json"), "w") as f:
            json.dump(
                {"source": "pyscf " + __import__("pyscf").__version__,
                 "geometry_angstrom": atoms, "basis": "sto-6g",
                 "e_rhf": e_hf, "e_fci": e_fci, "e_nuc": mol.energy_nuc()},
                f, indent=2)
        print(name, e_hf, e_fci)


if __name__ == "__main__":
    main()
