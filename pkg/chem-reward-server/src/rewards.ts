import type { JSMol, RDKitModule } from "@rdkit/rdkit";

import { qed } from "./qed";
import { ringCount } from "./rings";
import { saReward } from "./sa";

export const REWARD_NAMES = ["qed", "rings", "sa"] as const;

export type RewardName = (typeof REWARD_NAMES)[number];

export function isRewardName(name: string): name is RewardName {
  return (REWARD_NAMES as readonly string[]).includes(name);
}

export function computeReward(module: RDKitModule, mol: JSMol, name: RewardName): number {
  switch (name) {
    case "qed":
      return qed(module, mol);
    case "rings":
      return ringCount(mol);
    case "sa":
      return saReward(module, mol);
  }
}
