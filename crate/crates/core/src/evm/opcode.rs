// SPDX-License-Identifier: Apache-2.0

//! The EVM opcode table, frozen to the Shanghai instruction set.
//!
//! Every byte value maps to exactly one [`Opcode`]. Bytes with no assigned
//! instruction map to a mnemonic of the form `UNKNOWN_0xNN`; they are kept
//! rather than rejected because deployed bytecode routinely carries data
//! sections (constructor arguments, CBOR metadata) after the code proper.

use std::fmt;
use std::sync::LazyLock;

/// Instruction-set revision the table reflects.
pub const TABLE_VERSION: &str = "shanghai";

const PUSH1: u8 = 0x60;
const PUSH32: u8 = 0x7f;

/// Assigned opcodes outside the PUSH/DUP/SWAP/LOG families.
const NAMED: &[(u8, &str)] = &[
    (0x00, "STOP"),
    (0x01, "ADD"),
    (0x02, "MUL"),
    (0x03, "SUB"),
    (0x04, "DIV"),
    (0x05, "SDIV"),
    (0x06, "MOD"),
    (0x07, "SMOD"),
    (0x08, "ADDMOD"),
    (0x09, "MULMOD"),
    (0x0a, "EXP"),
    (0x0b, "SIGNEXTEND"),
    (0x10, "LT"),
    (0x11, "GT"),
    (0x12, "SLT"),
    (0x13, "SGT"),
    (0x14, "EQ"),
    (0x15, "ISZERO"),
    (0x16, "AND"),
    (0x17, "OR"),
    (0x18, "XOR"),
    (0x19, "NOT"),
    (0x1a, "BYTE"),
    (0x1b, "SHL"),
    (0x1c, "SHR"),
    (0x1d, "SAR"),
    (0x20, "KECCAK256"),
    (0x30, "ADDRESS"),
    (0x31, "BALANCE"),
    (0x32, "ORIGIN"),
    (0x33, "CALLER"),
    (0x34, "CALLVALUE"),
    (0x35, "CALLDATALOAD"),
    (0x36, "CALLDATASIZE"),
    (0x37, "CALLDATACOPY"),
    (0x38, "CODESIZE"),
    (0x39, "CODECOPY"),
    (0x3a, "GASPRICE"),
    (0x3b, "EXTCODESIZE"),
    (0x3c, "EXTCODECOPY"),
    (0x3d, "RETURNDATASIZE"),
    (0x3e, "RETURNDATACOPY"),
    (0x3f, "EXTCODEHASH"),
    (0x40, "BLOCKHASH"),
    (0x41, "COINBASE"),
    (0x42, "TIMESTAMP"),
    (0x43, "NUMBER"),
    (0x44, "PREVRANDAO"),
    (0x45, "GASLIMIT"),
    (0x46, "CHAINID"),
    (0x47, "SELFBALANCE"),
    (0x48, "BASEFEE"),
    (0x50, "POP"),
    (0x51, "MLOAD"),
    (0x52, "MSTORE"),
    (0x53, "MSTORE8"),
    (0x54, "SLOAD"),
    (0x55, "SSTORE"),
    (0x56, "JUMP"),
    (0x57, "JUMPI"),
    (0x58, "PC"),
    (0x59, "MSIZE"),
    (0x5a, "GAS"),
    (0x5b, "JUMPDEST"),
    (0x5f, "PUSH0"),
    (0xf0, "CREATE"),
    (0xf1, "CALL"),
    (0xf2, "CALLCODE"),
    (0xf3, "RETURN"),
    (0xf4, "DELEGATECALL"),
    (0xf5, "CREATE2"),
    (0xfa, "STATICCALL"),
    (0xfd, "REVERT"),
    (0xfe, "INVALID"),
    (0xff, "SELFDESTRUCT"),
];

static MNEMONICS: LazyLock<Vec<String>> = LazyLock::new(|| {
    let mut names: Vec<String> = (0..=255u8).map(|b| format!("UNKNOWN_0x{b:02X}")).collect();
    for &(byte, name) in NAMED {
        names[byte as usize] = name.to_string();
    }
    for n in 1..=32u8 {
        names[(0x5f + n) as usize] = format!("PUSH{n}");
    }
    for n in 1..=16u8 {
        names[(0x7f + n) as usize] = format!("DUP{n}");
        names[(0x8f + n) as usize] = format!("SWAP{n}");
    }
    for n in 0..=4u8 {
        names[(0xa0 + n) as usize] = format!("LOG{n}");
    }
    names
});

/// One entry of the opcode table, identified by its byte value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Opcode(u8);

impl Opcode {
    pub const fn new(byte: u8) -> Self {
        Opcode(byte)
    }

    pub const fn byte(self) -> u8 {
        self.0
    }

    pub fn mnemonic(self) -> &'static str {
        MNEMONICS[self.0 as usize].as_str()
    }

    /// Number of inline data bytes following the opcode (PUSH1..PUSH32 only).
    pub const fn immediate_len(self) -> usize {
        if self.0 >= PUSH1 && self.0 <= PUSH32 {
            (self.0 - 0x5f) as usize
        } else {
            0
        }
    }

    pub fn is_assigned(self) -> bool {
        !self.mnemonic().starts_with("UNKNOWN_")
    }

    /// Reverse lookup by mnemonic, including `UNKNOWN_0xNN` names.
    pub fn from_mnemonic(name: &str) -> Option<Self> {
        MNEMONICS.iter().position(|m| m == name).map(|i| Opcode(i as u8))
    }
}

impl From<u8> for Opcode {
    fn from(byte: u8) -> Self {
        Opcode(byte)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// All 256 table entries in byte order.
pub fn table() -> impl Iterator<Item = Opcode> {
    (0..=255u8).map(Opcode)
}

/// Renders the table as `byte_value,mnemonic,immediate_len` CSV with a header.
pub fn table_csv() -> String {
    let mut out = String::from("byte_value,mnemonic,immediate_len\n");
    for op in table() {
        out.push_str(&format!("{},{},{}\n", op.byte(), op.mnemonic(), op.immediate_len()));
    }
    out
}
