import type { JSMol, RDKitModule } from "@rdkit/rdkit";

import { compileQuery, countMatches, descriptors } from "./rdkit";

/**
 * Quantitative estimate of drug-likeness: a weighted geometric mean of
 * eight desirability curves (molecular weight, logP, acceptor and donor
 * counts, polar surface area, rotatable bonds, aromatic rings, and
 * structural alerts), each an asymmetric double sigmoid fit to drug
 * property histograms.
 */

interface AdsParams {
  a: number;
  b: number;
  c: number;
  d: number;
  e: number;
  f: number;
  dmax: number;
}

const ADS_PARAMS: Record<string, AdsParams> = {
  MW: { a: 2.817065973, b: 392.5754953, c: 290.7489764, d: 2.419764353, e: 49.22325677, f: 65.37051707, dmax: 104.9805561 },
  ALOGP: { a: 3.172690585, b: 137.8624751, c: 2.534937431, d: 4.581497897, e: 0.822739154, f: 0.576295591, dmax: 131.3186604 },
  HBA: { a: 2.948620388, b: 160.4605972, c: 3.615294657, d: 4.435986202, e: 0.290141953, f: 1.300669958, dmax: 148.7763046 },
  HBD: { a: 1.618662227, b: 1010.051101, c: 0.985094388, d: 0.000000001, e: 0.713820843, f: 0.920922555, dmax: 258.1632616 },
  PSA: { a: 1.876861559, b: 125.2232657, c: 62.90773554, d: 87.83366614, e: 12.01999824, f: 28.51324732, dmax: 104.5686167 },
  ROTB: { a: 0.01, b: 272.4121427, c: 2.55837997, d: 1.565547684, e: 1.271567166, f: 2.758063707, dmax: 105.4420403 },
  AROM: { a: 3.21778897, b: 957.7374108, c: 2.274627939, d: 0.000000001, e: 1.317690384, f: 0.375760881, dmax: 312.337261 },
  ALERTS: { a: 0.01, b: 1199.094025, c: -0.09002883, d: 0.000000001, e: 0.185904477, f: 0.875193782, dmax: 417.725314 },
};

const WEIGHTS: Record<string, number> = {
  MW: 0.66,
  ALOGP: 0.46,
  HBA: 0.05,
  HBD: 0.61,
  PSA: 0.06,
  ROTB: 0.65,
  AROM: 0.48,
  ALERTS: 0.95,
};

/** Hydrogen-bond acceptor patterns; matches are summed across patterns. */
export const ACCEPTOR_SMARTS = [
  "[oH0;X2]",
  "[OH1;X2;v2]",
  "[OH0;X2;v2]",
  "[OH0;X1;v2]",
  "[O-;X1]",
  "[SH0;X2;v2]",
  "[SH0;X1;v2]",
  "[S-;X1]",
  "[nH0;X2]",
  "[NH0;X1;v3]",
  "[$([N;+0;X3;v3]);!$(N[C,S]=O)]",
];

/**
 * Reactive or promiscuous substructures screened as alerts. A reduced
 * screen covering the common electrophiles, redox cyclers, and unstable
 * linkages; the full published screen is over a hundred patterns and is
 * not shipped with this toolkit. A smaller screen can only lower alert
 * counts, so molecules whose only alerts are unlisted ones (aspirin's
 * phenol ester, for example) score higher here than under the full
 * screen.
 */
export const ALERT_SMARTS = [
  "*1[O,S,N]*1",
  "[S,C](=[O,S])[F,Br,Cl,I]",
  "[CX4][Cl,Br,I]",
  "[C,c]S(=O)(=O)O[C,c]",
  "C=[C!r]C#N",
  "C1(=[O,N])C=CC(=[O,N])C=C1",
  "C1(=[O,N])C(=[O,N])C=CC=C1",
  "N=[N+]=[N-]",
  "C=[N+]=[N-]",
  "N=NC(=O)",
  "N=N",
  "OO",
  "[N;R0][N;R0]C(=O)",
  "[C;!R]=[N;!R]",
  "N=C=O",
  "N=C=S",
  "[SX2H]",
  "n[OH]",
  "[NX3](=O)=O",
  "C(=O)N[OH]",
  "[Hg,Pb,As,Sb,Sn,Cd,Se,se]",
];

interface QueryCache {
  acceptors: JSMol[];
  alerts: JSMol[];
}

const caches = new WeakMap<RDKitModule, QueryCache>();

function queries(module: RDKitModule): QueryCache {
  let cache = caches.get(module);
  if (!cache) {
    cache = {
      acceptors: ACCEPTOR_SMARTS.map((s) => compileQuery(module, s)),
      alerts: ALERT_SMARTS.map((s) => compileQuery(module, s)),
    };
    caches.set(module, cache);
  }
  return cache;
}

function ads(x: number, p: AdsParams): number {
  const sig1 = 1.0 + Math.exp(-(x - p.c + p.d / 2.0) / p.e);
  const sig2 = 1.0 + Math.exp(-(x - p.c - p.d / 2.0) / p.f);
  return (p.a + (p.b / sig1) * (1.0 - 1.0 / sig2)) / p.dmax;
}

export interface QedProperties {
  MW: number;
  ALOGP: number;
  HBA: number;
  HBD: number;
  PSA: number;
  ROTB: number;
  AROM: number;
  ALERTS: number;
}

export function qedProperties(module: RDKitModule, mol: JSMol): QedProperties {
  const d = descriptors(mol);
  const cache = queries(module);
  // Acceptors count every match; alerts count patterns that match at all.
  const matchTotal = (patterns: JSMol[]) =>
    patterns.reduce((total, q) => total + countMatches(mol, q), 0);
  const patternsPresent = (patterns: JSMol[]) =>
    patterns.reduce((total, q) => total + (countMatches(mol, q) > 0 ? 1 : 0), 0);
  return {
    MW: d.amw,
    ALOGP: d.CrippenClogP,
    HBA: matchTotal(cache.acceptors),
    HBD: d.NumHBD,
    PSA: d.tpsa,
    ROTB: d.NumRotatableBonds,
    AROM: d.NumAromaticRings,
    ALERTS: patternsPresent(cache.alerts),
  };
}

export function qed(module: RDKitModule, mol: JSMol): number {
  const props = qedProperties(module, mol);
  let weighted = 0.0;
  let totalWeight = 0.0;
  for (const [name, params] of Object.entries(ADS_PARAMS)) {
    const weight = WEIGHTS[name];
    const desirability = ads(props[name as keyof QedProperties], params);
    weighted += weight * Math.log(desirability);
    totalWeight += weight;
  }
  return Math.exp(weighted / totalWeight);
}
