//! Seeded random inputs: loop-free programs and flat specifications.
//!
//! Everything is driven by a `ChaCha8Rng`, so a seed fixes the output on every platform.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

use crate::spec::{Atom, AtomSet, Case, Specification};

pub type GenRng = ChaCha8Rng;

pub fn rng(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of generated methods.
#[derive(Debug, Clone, Copy)]
pub struct MethodShape {
    /// Integer parameters per method, the shared global excluded.
    pub max_params: usize,
    pub max_depth: usize,
    /// `if` statements per method; bounds the number of paths by `2^max_branches`.
    pub max_branches: usize,
    /// Literals are drawn from `[-bound, bound]`.
    pub bound: i64,
}

impl Default for MethodShape {
    fn default() -> Self {
        MethodShape { max_params: 2, max_depth: 4, max_branches: 6, bound: 2 }
    }
}

const PARAMS: [&str; 3] = ["a", "b", "c"];
const GLOBAL: &str = "g";

struct MethodGen<'r> {
    rng: &'r mut GenRng,
    shape: MethodShape,
    vars: Vec<&'static str>,
    branches: usize,
}

impl MethodGen<'_> {
    fn literal(&mut self) -> String {
        self.rng.gen_range(-self.shape.bound..=self.shape.bound).to_string()
    }

    fn operand(&mut self) -> String {
        if self.rng.gen_bool(0.6) {
            self.vars.choose(self.rng).expect("at least one variable").to_string()
        } else {
            self.literal()
        }
    }

    fn term(&mut self) -> String {
        match self.rng.gen_range(0..6) {
            0 | 1 => self.operand(),
            2 => format!("{} + {}", self.operand(), self.operand()),
            3 => format!("{} - {}", self.operand(), self.operand()),
            4 => format!("{} * {}", self.operand(), self.operand()),
            _ => format!("-{}", self.vars.choose(self.rng).expect("at least one variable")),
        }
    }

    fn comparison(&mut self) -> String {
        let op = ["<", "<=", ">", ">=", "==", "!="].choose(self.rng).expect("nonempty");
        format!("{} {op} {}", self.operand(), self.operand())
    }

    fn condition(&mut self) -> String {
        match self.rng.gen_range(0..8) {
            0 => format!("{} && {}", self.comparison(), self.comparison()),
            1 => format!("{} || {}", self.comparison(), self.comparison()),
            2 => format!("!({})", self.comparison()),
            _ => self.comparison(),
        }
    }

    /// Statements at one nesting level. Returns whether the block always returns.
    fn block(&mut self, depth: usize, indent: usize, out: &mut String) -> bool {
        let pad = "    ".repeat(indent);
        let len = self.rng.gen_range(1..=3);
        for i in 0..len {
            let last = i + 1 == len;
            let roll = self.rng.gen_range(0..10);
            if roll < 4 && depth < self.shape.max_depth && self.branches < self.shape.max_branches {
                self.branches += 1;
                let cond = self.condition();
                out.push_str(&format!("{pad}if ({cond}) {{\n"));
                let t = self.block(depth + 1, indent + 1, out);
                let e = if self.rng.gen_bool(0.8) {
                    out.push_str(&format!("{pad}}} else {{\n"));
                    self.block(depth + 1, indent + 1, out)
                } else {
                    false
                };
                out.push_str(&format!("{pad}}}\n"));
                if t && e {
                    return true;
                }
            } else if roll == 4 && depth > 0 && last {
                let value = self.term();
                out.push_str(&format!("{pad}return {value};\n"));
                return true;
            } else {
                let target = *self.vars.choose(self.rng).expect("at least one variable");
                let value = self.term();
                out.push_str(&format!("{pad}{target} = {value};\n"));
            }
        }
        false
    }
}

/// A program of `count` loop-free methods `m0`, `m1`, … sharing the global `g`.
pub fn random_program(rng: &mut GenRng, count: usize, shape: MethodShape) -> String {
    let mut out = format!("global int {GLOBAL};\n");
    for i in 0..count {
        let n = rng.gen_range(1..=shape.max_params.clamp(1, PARAMS.len()));
        let params = &PARAMS[..n];
        let mut vars: Vec<&'static str> = params.to_vec();
        vars.push(GLOBAL);
        let mut g = MethodGen { rng: &mut *rng, shape, vars, branches: 0 };
        let mut body = String::new();
        let returns = g.block(0, 1, &mut body);
        if !returns {
            let value = g.term();
            body.push_str(&format!("    return {value};\n"));
        }
        let sig: Vec<String> = params.iter().map(|p| format!("int {p}")).collect();
        out.push_str(&format!("\nint m{i}({}) {{\n{body}}}\n", sig.join(", ")));
    }
    out
}

/// Shape of generated flat specifications.
#[derive(Debug, Clone, Copy)]
pub struct SnfShape {
    pub min_cases: usize,
    pub max_cases: usize,
    pub min_pre: usize,
    pub max_pre: usize,
}

impl Default for SnfShape {
    fn default() -> Self {
        SnfShape { min_cases: 2, max_cases: 16, min_pre: 1, max_pre: 5 }
    }
}

/// Twelve precondition atoms: six comparisons and their negations.
pub const ATOM_POOL: [&str; 12] = [
    "a < b",
    "a > 0",
    "b > 0",
    "c > 0",
    "a == c",
    "b < c",
    "!(a < b)",
    "!(a > 0)",
    "!(b > 0)",
    "!(c > 0)",
    "!(a == c)",
    "!(b < c)",
];

const REST_POOL: [&str; 4] = ["\\result == 0", "\\result == 1", "\\result == a", "\\result == -1"];

/// A flat specification whose precondition atoms come from [`ATOM_POOL`].
pub fn random_snf(rng: &mut GenRng, shape: SnfShape) -> Specification {
    let n = rng.gen_range(shape.min_cases..=shape.max_cases);
    let mut cases = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.gen_range(shape.min_pre..=shape.max_pre);
        let pre: AtomSet = ATOM_POOL.choose_multiple(rng, k).map(|t| atom(t)).collect();
        let r = rng.gen_range(0..=2);
        let rest: AtomSet = REST_POOL.choose_multiple(rng, r).map(|t| atom(t)).collect();
        cases.push(Case::new(pre, rest));
    }
    Specification::from_cases(cases)
}

fn atom(text: &str) -> Atom {
    Atom::parse(text).expect("pool atoms parse")
}

/// A method with `k` sequential two-way branches, each arm assigning `per_arm` variables.
/// Every branch tests a parameter against a different constant, so the raw specification has
/// `2^k` cases whose preconditions overlap heavily.
pub fn sequential_branches(name: &str, k: usize, per_arm: usize) -> String {
    let locals = ["x", "y", "z", "w"];
    let per_arm = per_arm.clamp(1, locals.len());
    let mut body = String::new();
    for v in &locals[..per_arm] {
        body.push_str(&format!("    int {v} = 0;\n"));
    }
    for i in 0..k {
        body.push_str(&format!("    if (a > {i}) {{\n"));
        for (j, v) in locals[..per_arm].iter().enumerate() {
            body.push_str(&format!("        {v} = {v} + {};\n", j + 1));
        }
        body.push_str("    } else {\n");
        for (j, v) in locals[..per_arm].iter().enumerate() {
            body.push_str(&format!("        {v} = {v} - {};\n", j + 1));
        }
        body.push_str("    }\n");
    }
    let sum: Vec<&str> = locals[..per_arm].to_vec();
    body.push_str(&format!("    return {};\n", sum.join(" + ")));
    format!("int {name}(int a) {{\n{body}}}\n")
}
