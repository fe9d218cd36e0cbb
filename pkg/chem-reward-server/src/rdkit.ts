import type { JSMol, RDKitLoader, RDKitModule } from "@rdkit/rdkit";

let modulePromise: Promise<RDKitModule> | null = null;

/** Load the RDKit WASM module once and share it across callers. */
export function rdkit(): Promise<RDKitModule> {
  if (!modulePromise) {
    modulePromise = import("@rdkit/rdkit").then((mod) => {
      const init = ((mod as { default?: RDKitLoader }).default ?? mod) as RDKitLoader;
      return init();
    });
  }
  return modulePromise;
}

/** Parse a SMILES string; null for anything RDKit rejects. */
export function parseMol(module: RDKitModule, smiles: string): JSMol | null {
  try {
    return module.get_mol(smiles);
  } catch {
    return null;
  }
}

export interface Descriptors {
  amw: number;
  CrippenClogP: number;
  tpsa: number;
  NumRotatableBonds: number;
  NumHBD: number;
  NumAromaticRings: number;
  NumRings: number;
  NumHeavyAtoms: number;
  NumAtomStereoCenters: number;
  NumUnspecifiedAtomStereoCenters: number;
  NumSpiroAtoms: number;
  NumBridgeheadAtoms: number;
}

export function descriptors(mol: JSMol): Descriptors {
  return JSON.parse(mol.get_descriptors()) as Descriptors;
}

/** Number of substructure matches of a precompiled query in mol. */
export function countMatches(mol: JSMol, query: JSMol): number {
  const parsed: unknown = JSON.parse(mol.get_substruct_matches(query) || "[]");
  return Array.isArray(parsed) ? parsed.length : 0;
}

/** Compile a SMARTS pattern, throwing on typos so they surface in tests. */
export function compileQuery(module: RDKitModule, smarts: string): JSMol {
  const query = module.get_qmol(smarts);
  if (query === null) {
    throw new Error(`SMARTS pattern failed to compile: ${smarts}`);
  }
  return query;
}
