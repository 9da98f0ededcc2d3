//! Random well-typed models and event scripts for differential testing.
//!
//! Every generated model parses and analyzes cleanly. Runs may still
//! fault (failed preconditions, division by zero), which is part of what
//! the comparisons cover.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::Rng;

/// Generated model with the name of its machine and its events.
#[derive(Clone, Debug)]
pub struct FuzzModel {
    pub source: String,
    pub machine: String,
    pub events: Vec<String>,
}

pub const MAX_STATES: usize = 5;
pub const MAX_TRANSITIONS: usize = 8;

const EVENTS: [&str; 3] = ["e0", "e1", "e2"];

/// A machine with 1..=5 states and 0..=8 transitions over a fixed
/// interface of int, real, boolean and vector variables, one clock, one
/// platform-bound operation and one defined operation with a contract.
pub fn model<R: Rng + ?Sized>(rng: &mut R) -> FuzzModel {
    let mut g = Gen { rng, depth: 0 };
    let mut s = String::new();
    s.push_str("interface I {\n");
    let _ = writeln!(s, "    var x: int = {}", g.rng.random_range(-3..4));
    let _ = writeln!(s, "    var y: real = {:?}", g.small_real());
    s.push_str("    var b: boolean = false\n");
    s.push_str("    var v: vector2d = vec2(0.0, 1.0)\n");
    for e in EVENTS {
        let _ = writeln!(s, "    event {e}");
    }
    s.push_str("    op Ext(a: real)\n    op Def(n: int)\n}\n\n");

    let n_states = g.rng.random_range(1..=MAX_STATES);
    let finals: Vec<bool> = (0..n_states)
        .map(|i| i > 0 && g.rng.random_bool(0.15))
        .collect();
    s.push_str("machine M requires I {\n    clock C\n    var z: int = 0\n");
    for (i, &is_final) in finals.iter().enumerate() {
        s.push_str("    ");
        if i == 0 {
            s.push_str("initial ");
        }
        if is_final {
            s.push_str("final ");
        }
        let _ = write!(s, "state S{i}");
        let entry = g.rng.random_bool(0.6).then(|| g.actions());
        let (during, exit) = if is_final {
            (None, None)
        } else {
            (
                g.rng.random_bool(0.5).then(|| g.actions()),
                g.rng.random_bool(0.3).then(|| g.actions()),
            )
        };
        if entry.is_none() && during.is_none() && exit.is_none() {
            s.push('\n');
            continue;
        }
        s.push_str(" {\n");
        for (kw, a) in [("entry", entry), ("during", during), ("exit", exit)] {
            if let Some(a) = a {
                let _ = writeln!(s, "        {kw} {a}");
            }
        }
        s.push_str("    }\n");
    }
    let sources: Vec<usize> = (0..n_states).filter(|&i| !finals[i]).collect();
    let n_trans = if sources.is_empty() {
        0
    } else {
        g.rng.random_range(0..=MAX_TRANSITIONS)
    };
    for _ in 0..n_trans {
        let src = sources[g.rng.random_range(0..sources.len())];
        let tgt = g.rng.random_range(0..n_states);
        let _ = write!(s, "    transition S{src} -> S{tgt}");
        if g.rng.random_bool(0.6) {
            let _ = write!(s, " on {}", EVENTS[g.rng.random_range(0..EVENTS.len())]);
        }
        if g.rng.random_bool(0.5) {
            let guard = g.boolean();
            let _ = write!(s, " [{guard}]");
        }
        if g.rng.random_bool(0.5) {
            let a = g.actions();
            let _ = write!(s, " / {a}");
        }
        s.push('\n');
    }
    s.push_str("}\n\n");
    s.push_str(
        "operation Def(n: int)\n    pre n < 40\n    post x >= -1000000\n{\n    initial state A {\n        entry x := x + n; b := not b\n    }\n    state B\n    final state F\n    transition A -> B [x > 100]\n    transition A -> F\n    transition B -> F / x := 0\n}\n",
    );
    FuzzModel {
        source: s,
        machine: String::from("M"),
        events: EVENTS.iter().map(|e| String::from(*e)).collect(),
    }
}

/// `cycles` random event sets over `events`.
pub fn script<R: Rng + ?Sized>(rng: &mut R, events: &[String], cycles: usize) -> Vec<Vec<String>> {
    (0..cycles)
        .map(|_| {
            events
                .iter()
                .filter(|_| rng.random_bool(0.3))
                .cloned()
                .collect()
        })
        .collect()
}

struct Gen<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    depth: u32,
}

impl<R: Rng + ?Sized> Gen<'_, R> {
    fn small_real(&mut self) -> f64 {
        self.rng.random_range(-8i32..9) as f64 / 4.0
    }

    fn leaf(&mut self) -> bool {
        self.depth >= 3 || self.rng.random_bool(0.4)
    }

    fn nested(&mut self, f: impl FnOnce(&mut Self) -> String) -> String {
        self.depth += 1;
        let s = f(self);
        self.depth -= 1;
        s
    }

    fn int(&mut self) -> String {
        if self.leaf() {
            return match self.rng.random_range(0..3) {
                0 => format!("{}", self.rng.random_range(0..6)),
                1 => String::from("x"),
                _ => String::from("z"),
            };
        }
        self.nested(|g| match g.rng.random_range(0..6) {
            0 => format!("({} + {})", g.int(), g.int()),
            1 => format!("({} - {})", g.int(), g.int()),
            2 => format!("({} * {})", g.int(), g.int()),
            3 => format!("({} / {})", g.int(), g.int()),
            4 => format!("-({})", g.int()),
            _ => format!("({} ? {} : {})", g.boolean(), g.int(), g.int()),
        })
    }

    fn real(&mut self) -> String {
        if self.leaf() {
            return match self.rng.random_range(0..4) {
                0 => format!("{:?}", self.small_real().abs()),
                1 => String::from("y"),
                2 => String::from("since(C)"),
                _ => self.int(),
            };
        }
        self.nested(|g| match g.rng.random_range(0..5) {
            0 => format!("({} + {})", g.real(), g.real()),
            1 => format!("({} - {})", g.real(), g.int()),
            2 => format!("({} * {})", g.real(), g.real()),
            3 => format!("({} / {})", g.real(), g.real()),
            _ => format!("({} ? {} : {})", g.boolean(), g.real(), g.int()),
        })
    }

    fn vector(&mut self) -> String {
        if self.leaf() {
            return if self.rng.random_bool(0.5) {
                String::from("v")
            } else {
                format!("vec2({:?}, {:?})", self.small_real(), self.small_real())
            };
        }
        self.nested(|g| match g.rng.random_range(0..3) {
            0 => format!("({} + {})", g.vector(), g.vector()),
            1 => format!("({} - {})", g.vector(), g.vector()),
            _ => format!("({} * {})", g.vector(), g.real()),
        })
    }

    fn boolean(&mut self) -> String {
        if self.leaf() {
            return match self.rng.random_range(0..4) {
                0 => String::from("true"),
                1 => String::from("b"),
                2 => format!("(since(C) >= {})", self.rng.random_range(0..6)),
                _ => format!("(x < {})", self.rng.random_range(-2..5)),
            };
        }
        self.nested(|g| match g.rng.random_range(0..7) {
            0 => format!("({} and {})", g.boolean(), g.boolean()),
            1 => format!("({} or {})", g.boolean(), g.boolean()),
            2 => format!("not ({})", g.boolean()),
            3 => format!("({} <= {})", g.int(), g.real()),
            4 => format!("({} == {})", g.int(), g.int()),
            5 => format!("({} != {})", g.vector(), g.vector()),
            _ => format!("({} > {})", g.real(), g.real()),
        })
    }

    fn action(&mut self) -> String {
        match self.rng.random_range(0..8) {
            0 => format!("x := {}", self.int()),
            1 => format!("z := {}", self.int()),
            2 => format!("y := {}", self.real()),
            3 => format!("b := {}", self.boolean()),
            4 => format!("v := {}", self.vector()),
            5 => String::from("#C"),
            6 => format!("Ext({})", self.real()),
            _ => format!("Def({})", self.int()),
        }
    }

    fn actions(&mut self) -> String {
        let n = self.rng.random_range(1..=3);
        let parts: Vec<String> = (0..n).map(|_| self.action()).collect();
        parts.join("; ")
    }
}
