#!/usr/bin/env node
import { parseArgs } from "node:util";

import { isRewardName, REWARD_NAMES } from "./rewards";
import { serve } from "./server";

const USAGE = `usage: chem-reward-server --reward {${REWARD_NAMES.join("|")}}`;

function main(): void {
  let reward: string | undefined;
  try {
    const { values } = parseArgs({ options: { reward: { type: "string" } } });
    reward = values.reward;
  } catch (error) {
    process.stderr.write(`${(error as Error).message}\n${USAGE}\n`);
    process.exit(2);
  }
  if (reward === undefined || !isRewardName(reward)) {
    process.stderr.write(`${USAGE}\n`);
    process.exit(2);
  }
  serve(reward).catch((error: Error) => {
    process.stderr.write(`chem-reward-server: fatal: ${error.stack ?? error.message}\n`);
    process.exit(1);
  });
}

main();
