import type { JSMol } from "@rdkit/rdkit";

import { descriptors } from "./rdkit";

/** Ring count from the symmetrized smallest set of smallest rings. */
export function ringCount(mol: JSMol): number {
  return descriptors(mol).NumRings;
}
