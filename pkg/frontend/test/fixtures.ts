// Shared protocol fixtures, byte-exact output of the game server's state
// machine (tests/golden/protocol_fixtures.json at the repo root). The
// server's own test suite regenerates and verifies the same file.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import type { ServerMessage } from "../src/protocol.js";

export interface Exchange {
  at: number;
  inbound: Record<string, unknown>;
  outbound: { audience: string; payload: ServerMessage }[];
}

export interface ProtocolFixture {
  phrase_text: string;
  exchanges: Exchange[];
}

const here = dirname(fileURLToPath(import.meta.url));

export function loadFixture(): ProtocolFixture {
  const path = join(here, "..", "..", "tests", "golden", "protocol_fixtures.json");
  return JSON.parse(readFileSync(path, "utf-8")) as ProtocolFixture;
}

/** Messages a given role would receive over its connection, in order. */
export function messagesFor(
  fixture: ProtocolFixture,
  role: "drawer" | "guesser",
): ServerMessage[] {
  const out: ServerMessage[] = [];
  for (const exchange of fixture.exchanges) {
    const senderRole = (exchange.inbound as { role?: string }).role;
    for (const message of exchange.outbound) {
      if (
        message.audience === role ||
        message.audience === "both" ||
        (message.audience === "sender" && senderRole === role)
      ) {
        out.push(message.payload);
      }
    }
  }
  return out;
}
