import type { JSMol, RDKitModule } from "@rdkit/rdkit";

import { compileQuery, countMatches, descriptors } from "./rdkit";

/**
 * Synthetic-accessibility reward on a 0..1 scale, 1 meaning easy to make.
 *
 * The raw score follows the standard complexity recipe: penalties for
 * size, stereocenters, spiro fusions, bridgeheads, and macrocycles,
 * mapped onto the familiar 1 (easy) to 10 (hard) range. The
 * fragment-frequency bonus needs a large precomputed fragment table that
 * the WASM toolkit build does not ship, so it is omitted; scores here
 * therefore read somewhat harder than the full recipe would give. The
 * reward is (10 - score) / 9, clamped to [0, 1].
 */

const macrocycleQueries = new WeakMap<RDKitModule, JSMol>();

function macrocycleQuery(module: RDKitModule): JSMol {
  let query = macrocycleQueries.get(module);
  if (!query) {
    query = compileQuery(module, "[r{9-}]");
    macrocycleQueries.set(module, query);
  }
  return query;
}

export function saScore(module: RDKitModule, mol: JSMol): number {
  const d = descriptors(mol);
  const numAtoms = d.NumHeavyAtoms;
  const chiralCenters = d.NumAtomStereoCenters + d.NumUnspecifiedAtomStereoCenters;

  const sizePenalty = Math.pow(numAtoms, 1.005) - numAtoms;
  const stereoPenalty = Math.log10(chiralCenters + 1);
  const spiroPenalty = Math.log10(d.NumSpiroAtoms + 1);
  const bridgePenalty = Math.log10(d.NumBridgeheadAtoms + 1);
  const macrocyclePenalty =
    countMatches(mol, macrocycleQuery(module)) > 0 ? Math.log10(2) : 0.0;

  const raw = -(sizePenalty + stereoPenalty + spiroPenalty + bridgePenalty + macrocyclePenalty);

  // Map the raw score onto 1..10 with the conventional calibration range,
  // squashing the tail above 8.
  const min = -4.0;
  const max = 2.5;
  let score = 11.0 - ((raw - min + 1.0) / (max - min)) * 9.0;
  if (score > 8.0) {
    score = 8.0 + Math.log(score + 1.0 - 9.0);
  }
  if (score > 10.0) {
    score = 10.0;
  } else if (score < 1.0) {
    score = 1.0;
  }
  return score;
}

export function saReward(module: RDKitModule, mol: JSMol): number {
  const reward = (10.0 - saScore(module, mol)) / 9.0;
  return Math.min(1.0, Math.max(0.0, reward));
}
