import readline from "node:readline";
import type { RDKitModule } from "@rdkit/rdkit";

import { parseMol, rdkit } from "./rdkit";
import { computeReward, type RewardName } from "./rewards";

/**
 * Request/reply shapes for the line-delimited JSON protocol. One request
 * per line on stdin, one reply per line on stdout, flushed as written.
 * Lines that are not JSON objects get an id:null error reply plus a
 * stderr note, and the loop keeps running.
 */

interface RewardReply {
  id: number | null;
  reward: number;
  valid: boolean;
}

function reply(payload: RewardReply): void {
  process.stdout.write(JSON.stringify(payload) + "\n");
}

function handleLine(module: RDKitModule, rewardName: RewardName, line: string): void {
  const trimmed = line.trim();
  if (trimmed === "") {
    return;
  }

  let request: unknown;
  try {
    request = JSON.parse(trimmed);
  } catch {
    process.stderr.write(`chem-reward-server: skipping non-JSON line: ${trimmed.slice(0, 120)}\n`);
    reply({ id: null, reward: 0, valid: false });
    return;
  }
  if (typeof request !== "object" || request === null || Array.isArray(request)) {
    process.stderr.write("chem-reward-server: request is not a JSON object\n");
    reply({ id: null, reward: 0, valid: false });
    return;
  }

  const record = request as Record<string, unknown>;
  const id = Number.isInteger(record.id) ? (record.id as number) : null;
  const text = record.text;
  if (id === null) {
    process.stderr.write("chem-reward-server: request is missing an integer id\n");
  }
  if (typeof text !== "string") {
    reply({ id, reward: 0, valid: false });
    return;
  }

  const mol = parseMol(module, text);
  if (mol === null) {
    reply({ id, reward: 0, valid: false });
    return;
  }
  try {
    const reward = computeReward(module, mol, rewardName);
    if (Number.isFinite(reward)) {
      reply({ id, reward, valid: true });
    } else {
      reply({ id, reward: 0, valid: false });
    }
  } finally {
    mol.delete();
  }
}

/** Run the request loop until stdin closes. Stateless across requests. */
export async function serve(rewardName: RewardName): Promise<void> {
  const module = await rdkit();
  const lines = readline.createInterface({ input: process.stdin, terminal: false });
  lines.on("line", (line) => handleLine(module, rewardName, line));
  await new Promise<void>((resolve) => lines.once("close", resolve));
}
