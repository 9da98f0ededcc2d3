//! IR documents: compiled machines as canonical JSON with a trailing CRC32.
//!
//! The body is serialized with sorted keys and no whitespace; reals use the
//! shortest decimal that round-trips. The checksum covers that body and is
//! appended as the last key, so the file is `{...,"crc32":"xxxxxxxx"}`.
//! Loading goes parse, version, checksum, decode, validate.

use serde_json::{json, Map, Value as Json};
use smforge_core::compiler::{
    CompileError, CompiledMachine, CompiledState, CompiledTransition, DefinedOp, Instr,
    OpSignature, Program, VarSlot,
};
use smforge_core::{Type, Value};

pub const IR_VERSION: u64 = 1;
pub const EXTENSION: &str = ".smir.json";

#[derive(Debug, thiserror::Error)]
pub enum IrError {
    #[error("not a JSON document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported IR version {0}")]
    Version(String),
    #[error("checksum mismatch: file says {stored}, content hashes to {actual}")]
    Checksum { stored: String, actual: String },
    #[error("malformed IR: {0}")]
    Decode(String),
    #[error(transparent)]
    Invalid(#[from] CompileError),
}

fn bad(what: impl Into<String>) -> IrError {
    IrError::Decode(what.into())
}

/// Encode machines as an IR document, newline terminated.
pub fn serialize(machines: &[CompiledMachine]) -> String {
    let body = json!({
        "version": IR_VERSION,
        "machines": machines.iter().map(machine_json).collect::<Vec<_>>(),
    });
    let body = body.to_string();
    let crc = crc32fast::hash(body.as_bytes());
    format!("{},\"crc32\":\"{crc:08x}\"}}\n", &body[..body.len() - 1])
}

pub fn load(text: &str) -> Result<Vec<CompiledMachine>, IrError> {
    let doc: Json = serde_json::from_str(text)?;
    let Json::Object(mut doc) = doc else {
        return Err(bad("top level is not an object"));
    };
    match doc.get("version") {
        Some(v) if v.as_u64() == Some(IR_VERSION) => {}
        Some(v) => return Err(IrError::Version(v.to_string())),
        None => return Err(IrError::Version(String::from("(missing)"))),
    }
    let stored = match doc.remove("crc32") {
        Some(Json::String(s)) => s,
        _ => return Err(bad("missing crc32")),
    };
    let actual = format!(
        "{:08x}",
        crc32fast::hash(Json::Object(doc.clone()).to_string().as_bytes())
    );
    if !stored.eq_ignore_ascii_case(&actual) {
        return Err(IrError::Checksum { stored, actual });
    }
    let machines = array(doc.get("machines"), "machines")?
        .iter()
        .map(decode_machine)
        .collect::<Result<Vec<_>, _>>()?;
    for m in &machines {
        m.validate()?;
    }
    Ok(machines)
}

/// Load a document that must hold `name`, or its only machine.
pub fn load_machine(text: &str, name: Option<&str>) -> Result<CompiledMachine, IrError> {
    let mut machines = load(text)?;
    match name {
        Some(n) => machines
            .into_iter()
            .find(|m| m.name == n)
            .ok_or_else(|| bad(format!("no machine `{n}`"))),
        None if machines.len() == 1 => Ok(machines.remove(0)),
        None => Err(bad(format!("{} machines; name one", machines.len()))),
    }
}

/// JSON form of a real. Non-finite values have no JSON number, so they
/// become strings.
pub fn real_json(r: f64) -> Json {
    if r.is_finite() {
        json!(r)
    } else if r.is_nan() {
        json!("NaN")
    } else if r > 0.0 {
        json!("Infinity")
    } else {
        json!("-Infinity")
    }
}

fn real_of(j: &Json) -> Option<f64> {
    match j {
        Json::Number(n) => n.as_f64(),
        Json::String(s) => match s.as_str() {
            "NaN" => Some(f64::NAN),
            "Infinity" => Some(f64::INFINITY),
            "-Infinity" => Some(f64::NEG_INFINITY),
            _ => None,
        },
        _ => None,
    }
}

pub fn value_json(v: &Value) -> Json {
    match *v {
        Value::Bool(b) => json!(b),
        Value::Int(i) => json!(i),
        Value::Real(r) => real_json(r),
        Value::Vec2(x, y) => json!([real_json(x), real_json(y)]),
    }
}

fn value_of(j: &Json, ty: Type) -> Option<Value> {
    Some(match ty {
        Type::Boolean => Value::Bool(j.as_bool()?),
        Type::Int => Value::Int(j.as_i64()?),
        Type::Real => Value::Real(real_of(j)?),
        Type::Vector2d => match j.as_array()?.as_slice() {
            [x, y] => Value::Vec2(real_of(x)?, real_of(y)?),
            _ => return None,
        },
    })
}

fn program_json(p: &Option<Program>) -> Json {
    let Some(p) = p else { return Json::Null };
    p.code
        .iter()
        .map(|i| {
            let operand = match *i {
                Instr::PushBool(b) => json!(b),
                Instr::PushInt(n) => json!(n),
                Instr::PushReal(r) => real_json(r),
                Instr::PushVec(x, y) => json!([real_json(x), real_json(y)]),
                Instr::LoadVar(k)
                | Instr::LoadLocal(k)
                | Instr::Since(k)
                | Instr::JumpIfFalse(k)
                | Instr::JumpIfFalseOrPop(k)
                | Instr::JumpIfTrueOrPop(k)
                | Instr::Jump(k)
                | Instr::StoreVar(k)
                | Instr::ResetClock(k)
                | Instr::CallExt(k)
                | Instr::CallDef(k) => json!(k),
                _ => Json::Null,
            };
            json!([i.mnemonic(), operand])
        })
        .collect()
}

fn states_json(states: &[CompiledState]) -> Json {
    states
        .iter()
        .map(|s| {
            json!({
                "name": s.name,
                "entry": program_json(&s.entry),
                "during": program_json(&s.during),
                "exit": program_json(&s.exit),
                "final": s.is_final,
            })
        })
        .collect()
}

fn transitions_json(ts: &[CompiledTransition]) -> Json {
    ts.iter()
        .map(|t| {
            json!({
                "src": t.source,
                "tgt": t.target,
                "event": t.event,
                "guard": program_json(&t.guard),
                "action": program_json(&t.action),
            })
        })
        .collect()
}

fn signature_json(sig: &OpSignature) -> Map<String, Json> {
    let params: Vec<Json> = sig
        .params
        .iter()
        .map(|(n, t)| json!({"name": n, "type": t.keyword()}))
        .collect();
    let mut m = Map::new();
    m.insert("name".into(), json!(sig.name));
    m.insert("params".into(), json!(params));
    m.insert("pre".into(), program_json(&sig.pre));
    m.insert("post".into(), program_json(&sig.post));
    m
}

fn machine_json(cm: &CompiledMachine) -> Json {
    let vars: Vec<Json> = cm
        .vars
        .iter()
        .map(|v| json!({"name": v.name, "type": v.ty.keyword(), "init": value_json(&v.init)}))
        .collect();
    let defined: Vec<Json> = cm
        .defined_ops
        .iter()
        .map(|d| {
            let mut m = signature_json(&d.sig);
            m.insert("states".into(), states_json(&d.states));
            m.insert("initial".into(), json!(d.initial));
            m.insert("transitions".into(), transitions_json(&d.transitions));
            Json::Object(m)
        })
        .collect();
    json!({
        "name": cm.name,
        "states": states_json(&cm.states),
        "initial": cm.initial,
        "transitions": transitions_json(&cm.transitions),
        "events": cm.events,
        "vars": vars,
        "clocks": cm.clocks,
        "externalOps": cm.external_ops.iter().map(|s| Json::Object(signature_json(s))).collect::<Vec<_>>(),
        "definedOps": defined,
    })
}

fn array<'a>(j: Option<&'a Json>, what: &str) -> Result<&'a Vec<Json>, IrError> {
    j.and_then(Json::as_array)
        .ok_or_else(|| bad(format!("`{what}` must be an array")))
}

fn string(j: Option<&Json>, what: &str) -> Result<String, IrError> {
    j.and_then(Json::as_str)
        .map(String::from)
        .ok_or_else(|| bad(format!("`{what}` must be a string")))
}

fn index(j: Option<&Json>, what: &str) -> Result<usize, IrError> {
    j.and_then(Json::as_u64)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| bad(format!("`{what}` must be a non-negative integer")))
}

fn ty(j: Option<&Json>, what: &str) -> Result<Type, IrError> {
    let s = string(j, what)?;
    Type::from_keyword(&s).ok_or_else(|| bad(format!("unknown type `{s}`")))
}

fn strings(j: Option<&Json>, what: &str) -> Result<Vec<String>, IrError> {
    array(j, what)?
        .iter()
        .map(|s| string(Some(s), what))
        .collect()
}

fn decode_instr(j: &Json) -> Result<Instr, IrError> {
    let pair = j
        .as_array()
        .filter(|p| p.len() == 2)
        .ok_or_else(|| bad("instruction is not a pair"))?;
    let (op, arg) = (
        pair[0]
            .as_str()
            .ok_or_else(|| bad("opcode is not a string"))?,
        &pair[1],
    );
    let k = || index(Some(arg), op);
    let real = |j: &Json| real_of(j).ok_or_else(|| bad(format!("`{op}` needs a real")));
    let none = |i: Instr| {
        if arg.is_null() {
            Ok(i)
        } else {
            Err(bad(format!("`{op}` takes no operand")))
        }
    };
    match op {
        "push_bool" => arg
            .as_bool()
            .map(Instr::PushBool)
            .ok_or_else(|| bad("push_bool needs a boolean")),
        "push_int" => arg
            .as_i64()
            .map(Instr::PushInt)
            .ok_or_else(|| bad("push_int needs an integer")),
        "push_real" => Ok(Instr::PushReal(real(arg)?)),
        "push_vec" => match arg.as_array().map(Vec::as_slice) {
            Some([x, y]) => Ok(Instr::PushVec(real(x)?, real(y)?)),
            _ => Err(bad("push_vec needs [x, y]")),
        },
        "load_var" => Ok(Instr::LoadVar(k()?)),
        "load_local" => Ok(Instr::LoadLocal(k()?)),
        "since" => Ok(Instr::Since(k()?)),
        "jump_if_false" => Ok(Instr::JumpIfFalse(k()?)),
        "jump_if_false_or_pop" => Ok(Instr::JumpIfFalseOrPop(k()?)),
        "jump_if_true_or_pop" => Ok(Instr::JumpIfTrueOrPop(k()?)),
        "jump" => Ok(Instr::Jump(k()?)),
        "store_var" => Ok(Instr::StoreVar(k()?)),
        "reset_clock" => Ok(Instr::ResetClock(k()?)),
        "call_ext" => Ok(Instr::CallExt(k()?)),
        "call_def" => Ok(Instr::CallDef(k()?)),
        "not" => none(Instr::Not),
        "neg" => none(Instr::Neg),
        "add" => none(Instr::Add),
        "sub" => none(Instr::Sub),
        "mul" => none(Instr::Mul),
        "div" => none(Instr::Div),
        "eq" => none(Instr::Eq),
        "ne" => none(Instr::Ne),
        "lt" => none(Instr::Lt),
        "le" => none(Instr::Le),
        "gt" => none(Instr::Gt),
        "ge" => none(Instr::Ge),
        "to_real" => none(Instr::ToReal),
        other => Err(bad(format!("unknown opcode `{other}`"))),
    }
}

fn decode_program(j: Option<&Json>) -> Result<Option<Program>, IrError> {
    match j {
        None | Some(Json::Null) => Ok(None),
        Some(Json::Array(code)) => Ok(Some(Program::new(
            code.iter().map(decode_instr).collect::<Result<_, _>>()?,
        ))),
        Some(_) => Err(bad("program must be an array or null")),
    }
}

fn decode_states(j: Option<&Json>) -> Result<Vec<CompiledState>, IrError> {
    array(j, "states")?
        .iter()
        .map(|s| {
            Ok(CompiledState {
                name: string(s.get("name"), "state name")?,
                entry: decode_program(s.get("entry"))?,
                during: decode_program(s.get("during"))?,
                exit: decode_program(s.get("exit"))?,
                is_final: s
                    .get("final")
                    .and_then(Json::as_bool)
                    .ok_or_else(|| bad("`final` must be a boolean"))?,
            })
        })
        .collect()
}

fn decode_transitions(j: Option<&Json>) -> Result<Vec<CompiledTransition>, IrError> {
    array(j, "transitions")?
        .iter()
        .map(|t| {
            let event = match t.get("event") {
                None | Some(Json::Null) => None,
                e => Some(index(e, "event")?),
            };
            Ok(CompiledTransition {
                source: index(t.get("src"), "src")?,
                target: index(t.get("tgt"), "tgt")?,
                event,
                guard: decode_program(t.get("guard"))?,
                action: decode_program(t.get("action"))?,
            })
        })
        .collect()
}

fn decode_signature(j: &Json) -> Result<OpSignature, IrError> {
    let params = array(j.get("params"), "params")?
        .iter()
        .map(|p| {
            Ok((
                string(p.get("name"), "param name")?,
                ty(p.get("type"), "param type")?,
            ))
        })
        .collect::<Result<_, IrError>>()?;
    Ok(OpSignature {
        name: string(j.get("name"), "operation name")?,
        params,
        pre: decode_program(j.get("pre"))?,
        post: decode_program(j.get("post"))?,
    })
}

fn decode_machine(j: &Json) -> Result<CompiledMachine, IrError> {
    let vars = array(j.get("vars"), "vars")?
        .iter()
        .map(|v| {
            let name = string(v.get("name"), "var name")?;
            let t = ty(v.get("type"), "var type")?;
            let init = v
                .get("init")
                .and_then(|i| value_of(i, t))
                .ok_or_else(|| bad(format!("bad initial value for `{name}`")))?;
            Ok(VarSlot { name, ty: t, init })
        })
        .collect::<Result<_, IrError>>()?;
    let defined_ops = array(j.get("definedOps"), "definedOps")?
        .iter()
        .map(|d| {
            Ok(DefinedOp {
                sig: decode_signature(d)?,
                states: decode_states(d.get("states"))?,
                initial: index(d.get("initial"), "initial")?,
                transitions: decode_transitions(d.get("transitions"))?,
            })
        })
        .collect::<Result<_, IrError>>()?;
    Ok(CompiledMachine {
        name: string(j.get("name"), "machine name")?,
        states: decode_states(j.get("states"))?,
        initial: index(j.get("initial"), "initial")?,
        transitions: decode_transitions(j.get("transitions"))?,
        events: strings(j.get("events"), "events")?,
        vars,
        clocks: strings(j.get("clocks"), "clocks")?,
        external_ops: array(j.get("externalOps"), "externalOps")?
            .iter()
            .map(decode_signature)
            .collect::<Result<_, _>>()?,
        defined_ops,
    })
}
