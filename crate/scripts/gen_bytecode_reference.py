#!/usr/bin/env python3
"""Regenerate the bytecode fixtures and their reference disassembly listings.

Inputs: a directory of compiled contract artifacts (JSON with a
"deployedBytecode" field, e.g. the build/contracts directory of the
@openzeppelin/contracts npm package). For each artifact this writes

  <Name>.json     eth_getCode-style JSON-RPC response carrying the runtime code
  <Name>.ref.csv  listing produced by pyevmasm (offset,byte,mnemonic,immediate)

pyevmasm stops at a trailing PUSH whose immediate runs past the end of the
code; the listing records that as a final "#truncated" comment line.

usage: gen_bytecode_reference.py ARTIFACT_DIR OUT_DIR
"""
import glob
import json
import os
import sys

import pyevmasm


def main(src, out):
    os.makedirs(out, exist_ok=True)
    written = 0
    for path in sorted(glob.glob(os.path.join(src, "*.json"))):
        code = json.load(open(path)).get("deployedBytecode", "0x")
        if len(code) <= 200 or "__" in code:
            continue
        name = os.path.splitext(os.path.basename(path))[0]
        raw = bytes.fromhex(code[2:])
        with open(os.path.join(out, name + ".json"), "w") as f:
            json.dump({"jsonrpc": "2.0", "id": 1, "result": code.lower()}, f)
            f.write("\n")
        end = 0
        with open(os.path.join(out, name + ".ref.csv"), "w") as f:
            f.write("offset,byte,mnemonic,immediate\n")
            for ins in pyevmasm.disassemble_all(raw, fork="istanbul"):
                imm = ""
                if ins.operand_size:
                    imm = raw[ins.pc + 1 : ins.pc + 1 + ins.operand_size].hex()
                f.write("%d,%02x,%s,%s\n" % (ins.pc, ins.opcode, ins.name, imm))
                end = ins.pc + 1 + ins.operand_size
            if end < len(raw):
                f.write("#truncated,%d\n" % end)
        written += 1
    print("wrote", written, "fixtures")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
