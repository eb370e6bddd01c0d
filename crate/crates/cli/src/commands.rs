//! Command dispatch and report assembly.

use std::collections::BTreeMap;
use std::time::Instant;

use polydom_core::berezin::{
    compatible, constrained_kernel, extended_transform_sweep, intertwine_check, intertwine_check_compressed, kernel,
    vn_check_model, vn_check_polydisc, VnVerdict,
};
use polydom_core::cone::{flat_equivalence, is_pure_element, membership, reconstruct};
use polydom_core::cpmap::CpTuple;
use polydom_core::fock::{build_model, compress, domain_check_model, variety_subspace};
use polydom_core::gen::generate;
use polydom_core::linalg::{op_norm, to_complex, to_rows, CMat};
use polydom_core::similarity::{
    cpmap_similarity, model_embed, rota_conjugate, solve_defect_equation, spectral_radius_equivalences,
    sznagy_solve, CpSimMode, Status, SzNagyOptions,
};
use polydom_core::{Error, Result, Tolerances};
use serde::Serialize;
use serde_json::{json, Value};

use crate::json;
use crate::spec::{versions, GenSpec, ProblemSpec, VnMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Radius,
    Cone,
    Model,
    Kernel,
    Rota,
    Solve,
    Sznagy,
    Vn,
    Cpsim,
    Gen,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Radius => "radius",
            Command::Cone => "cone",
            Command::Model => "model",
            Command::Kernel => "kernel",
            Command::Rota => "rota",
            Command::Solve => "solve",
            Command::Sznagy => "sznagy",
            Command::Vn => "vn",
            Command::Cpsim => "cpsim",
            Command::Gen => "gen",
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub trunc_degree: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub task: String,
    pub status: Status,
    pub inputs_digest: String,
    pub outputs: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub tolerances: Tolerances,
    pub versions: BTreeMap<String, String>,
    pub wall_time_ms: f64,
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Pass => 0,
        Status::Inconclusive => 2,
        Status::Failed => 1,
    }
}

struct Outcome {
    status: Status,
    outputs: Value,
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

fn mat(x: &CMat) -> Value {
    to_json(&to_rows(x))
}

fn ops_json(t: &polydom_core::cpmap::OperatorTuple) -> Value {
    Value::Array(
        t.families()
            .iter()
            .map(|f| Value::Array(f.iter().map(mat).collect()))
            .collect(),
    )
}

/// Runs `cmd` on the JSON text `input`; returns the emitted JSON and the exit code.
pub fn run(cmd: Command, input: &str, ov: Overrides) -> (String, i32) {
    let start = Instant::now();
    let parsed: std::result::Result<Value, Error> = serde_json::from_str(input).map_err(Error::from);
    let mut value = match parsed {
        Ok(v) => v,
        Err(e) => return error_report(cmd, "", Tolerances::default(), e, start),
    };
    apply_overrides(cmd, &mut value, ov);
    let digest = json::digest(&value);
    if cmd == Command::Gen {
        let res = serde_json::from_value::<GenSpec>(value)
            .map_err(Error::from)
            .and_then(|p| generate(&p).map(|inst| ProblemSpec::from_instance(&inst, p.seed)));
        return match res {
            Ok(spec) => (json::to_string(&spec).expect("spec serializes"), 0),
            Err(e) => error_report(cmd, &digest, Tolerances::default(), e, start),
        };
    }
    let spec: ProblemSpec = match serde_json::from_value(value) {
        Ok(s) => s,
        Err(e) => return error_report(cmd, &digest, Tolerances::default(), e.into(), start),
    };
    let tol = spec.tolerances();
    let res = spec.cp_tuple().and_then(|phi| dispatch(cmd, &spec, &phi, &tol, ov));
    match res {
        Ok(out) => {
            let report = Report {
                task: cmd.name().into(),
                status: out.status,
                inputs_digest: digest,
                outputs: out.outputs,
                error: None,
                tolerances: tol,
                versions: versions(),
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            (json::to_string(&report).expect("report serializes"), exit_code(out.status))
        }
        Err(e) => error_report(cmd, &digest, tol, e, start),
    }
}

fn apply_overrides(cmd: Command, value: &mut Value, ov: Overrides) {
    let Some(obj) = value.as_object_mut() else { return };
    if cmd == Command::Gen {
        if let Some(s) = ov.seed {
            obj.insert("seed".into(), json!(s));
        }
        return;
    }
    let params = obj.entry("params").or_insert_with(|| json!({}));
    let Some(p) = params.as_object_mut() else { return };
    if let Some(d) = ov.trunc_degree {
        p.insert("trunc_degree".into(), json!(d));
    }
    if let Some(s) = ov.seed {
        p.insert("seed".into(), json!(s));
    }
    if let Some(t) = ov.tol {
        let tols = p.entry("tolerances").or_insert_with(|| json!({}));
        if let Some(m) = tols.as_object_mut() {
            m.insert("residual".into(), json!(t));
        }
    }
}

fn error_report(cmd: Command, digest: &str, tol: Tolerances, e: Error, start: Instant) -> (String, i32) {
    let report = Report {
        task: cmd.name().into(),
        status: Status::Failed,
        inputs_digest: digest.into(),
        outputs: Value::Null,
        error: Some(e.to_string()),
        tolerances: tol,
        versions: versions(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    (json::to_string(&report).expect("report serializes"), 1)
}

fn dispatch(cmd: Command, spec: &ProblemSpec, phi: &CpTuple, tol: &Tolerances, ov: Overrides) -> Result<Outcome> {
    match cmd {
        Command::Radius => cmd_radius(spec, phi),
        Command::Cone => cmd_cone(spec, phi, tol),
        Command::Model => cmd_model(spec, phi, tol),
        Command::Kernel => cmd_kernel(spec, phi, tol),
        Command::Rota => cmd_rota(spec, phi, tol),
        Command::Solve => cmd_solve(spec, phi, tol),
        Command::Sznagy => cmd_sznagy(spec, phi, tol, ov),
        Command::Vn => cmd_vn(spec, phi, tol),
        Command::Cpsim => cmd_cpsim(spec, phi, tol),
        Command::Gen => unreachable!("gen is handled before parsing a problem"),
    }
}

fn degree(spec: &ProblemSpec) -> usize {
    spec.params.trunc_degree.unwrap_or(4)
}

fn all_nilpotent(phi: &CpTuple) -> bool {
    (0..phi.k()).all(|i| phi.nilpotency_order(i).is_some())
}

fn cmd_radius(spec: &ProblemSpec, phi: &CpTuple) -> Result<Outcome> {
    let entries = spectral_radius_equivalences(phi, spec.params.s_max.unwrap_or(64))?;
    let ok = entries.iter().all(|e| e.consistent);
    Ok(Outcome {
        status: if ok { Status::Pass } else { Status::Failed },
        outputs: json!({ "factors": entries }),
    })
}

fn cmd_cone(spec: &ProblemSpec, phi: &CpTuple, tol: &Tolerances) -> Result<Outcome> {
    let m = spec.m();
    let x = spec.matrix_param(&spec.params.x, phi.d())?;
    let report = membership(phi, &m, &x, tol, 16)?;
    let purity = is_pure_element(phi, &x, 1e-10, spec.params.s_max.unwrap_or(2000));
    let mut status = Status::Pass;
    let mut notes = Vec::new();
    let recon = match reconstruct(phi, &m, &x, tol) {
        Ok(r) => {
            let bound = tol.residual * op_norm(&x).max(1.0);
            if r.residual > bound {
                status = Status::Failed;
            }
            json!({ "residual": r.residual, "series_error_bound": r.series_error_bound, "bound": bound })
        }
        Err(e @ (Error::Divergence { .. } | Error::Numerical(_))) => {
            notes.push(format!("reconstruction skipped: {e}"));
            Value::Null
        }
        Err(e) => return Err(e),
    };
    let flat = match flat_equivalence(phi, &m, &x, tol) {
        Ok(f) => {
            if !f.consistent {
                status = Status::Failed;
            }
            to_json(&f)
        }
        Err(e @ Error::Precondition(_)) => {
            notes.push(format!("flat equivalence skipped: {e}"));
            Value::Null
        }
        Err(e) => return Err(e),
    };
    Ok(Outcome {
        status,
        outputs: json!({
            "membership": report,
            "purity": purity,
            "reconstruction": recon,
            "flat_equivalence": flat,
            "notes": notes,
        }),
    })
}

fn cmd_model(spec: &ProblemSpec, phi: &CpTuple, tol: &Tolerances) -> Result<Outcome> {
    let m = spec.m();
    let dg = degree(spec);
    let model = build_model(phi.symbols(), &m, dg)?;
    let sub = variety_subspace(&model, &spec.constraints, tol)?;
    let comp = compress(&model, &sub);
    let reach = phi
        .symbols()
        .iter()
        .zip(&m)
        .map(|(f, &mi)| mi as usize * f.max_degree())
        .max()
        .unwrap_or(0);
    let domain = if dg >= reach {
        let mut r = domain_check_model(&model, &m, dg - reach, tol.psd_rel)?;
        for e in &mut r.entries {
            e.diagonal.clear();
        }
        Some(r)
    } else {
        None
    };
    let q_ok = comp.q_residuals.iter().all(|&v| v <= 1e-10);
    let inv_ok = comp.invariance_residual <= 1e-10;
    let dom_ok = domain.as_ref().is_none_or(|d| d.pass);
    let status = if q_ok && inv_ok && dom_ok { Status::Pass } else { Status::Failed };
    let mut outputs = json!({
        "fock_dim": model.dim(),
        "n_q_dim": sub.dim(),
        "m_q_dim": sub.m_dim,
        "q_residuals": comp.q_residuals,
        "invariance_residual": comp.invariance_residual,
        "domain": domain,
    });
    if spec.params.export.unwrap_or(false) {
        let w: Vec<Vec<Value>> = model
            .ops()
            .iter()
            .map(|f| f.iter().map(|op| to_json(&op.triplets())).collect())
            .collect();
        let s: Vec<Vec<Value>> = comp.s.iter().map(|f| f.iter().map(|x| mat(&to_complex(x))).collect()).collect();
        outputs["w_triplets"] = to_json(&w);
        outputs["s"] = to_json(&s);
        outputs["n_q_degrees"] = to_json(&sub.degrees);
    }
    Ok(Outcome { status, outputs })
}

fn cmd_kernel(spec: &ProblemSpec, phi: &CpTuple, tol: &Tolerances) -> Result<Outcome> {
    let m = spec.m();
    let dg = degree(spec);
    let r = spec.matrix_param(&spec.params.r, phi.d())?;
    let omega = compatible(phi, &m, &r, &spec.constraints, tol)?;
    let model = build_model(phi.symbols(), &m, dg)?;
    let full = kernel(&omega, &model, tol)?;
    let inter = intertwine_check(phi, &model, &full);
    let mut status = if inter.max_interior <= tol.residual { Status::Pass } else { Status::Failed };
    let mut outputs = json!({
        "fock_dim": model.dim(),
        "rank": full.rank,
        "gram": mat(&full.gram()),
        "series": mat(&omega.series),
        "series_error": omega.series_error,
        "gram_residual": full.gram_residual,
        "tail_bound": full.tail_bound,
        "intertwine": inter,
    });
    if !spec.constraints.is_empty() || !spec.params.pairs.is_empty() {
        let sub = variety_subspace(&model, &spec.constraints, tol)?;
        let comp = compress(&model, &sub);
        let ck = constrained_kernel(&omega, &full, &sub);
        let inter_c = intertwine_check_compressed(phi, &model, &sub, &comp, &ck.kernel);
        if inter_c.max_interior > tol.residual || ck.range_residual > tol.residual {
            status = Status::Failed;
        }
        let d_mat = ck.kernel.gram();
        let ops = phi.operators();
        let mut pairs = Vec::new();
        for p in &spec.params.pairs {
            let chi = to_complex(&(comp.multi_word(&p.alpha) * comp.multi_word(&p.beta).transpose()));
            let v = ck.kernel.transform(&chi);
            let want = ops.multi_product(&p.alpha) * &d_mat * ops.multi_product(&p.beta).adjoint();
            let res = op_norm(&(&v - want));
            if res > tol.residual {
                status = status.worst(Status::Inconclusive);
            }
            pairs.push(json!({ "pair": p, "value": mat(&v), "residual": res }));
        }
        outputs["constrained"] = json!({
            "n_q_dim": sub.dim(),
            "range_residual": ck.range_residual,
            "gram": mat(&d_mat),
            "gram_residual": ck.kernel.gram_residual,
            "tail_bound": ck.kernel.tail_bound,
            "intertwine": inter_c,
            "transforms": pairs,
        });
    }
    if !spec.params.r_grid.is_empty() {
        let d_pos = spec.matrix_param(&spec.params.x, phi.d())?;
        let sweep = extended_transform_sweep(phi, &m, &d_pos, &spec.constraints, &spec.params.r_grid, &spec.params.pairs, dg, tol)?;
        if sweep.max_gram_residual > tol.residual {
            status = status.worst(Status::Inconclusive);
        }
        outputs["sweep"] = json!({
            "points": sweep.points,
            "max_gram_residual": sweep.max_gram_residual,
            "max_ksk_residual": sweep.max_ksk_residual,
        });
    }
    Ok(Outcome { status, outputs })
}

fn cmd_rota(spec: &ProblemSpec, phi: &CpTuple, tol: &Tolerances) -> Result<Outcome> {
    let m = spec.m();
    let res = rota_conjugate(phi, &m, &spec.constraints, tol)?;
    let mut status = res.certificate.status;
    let mut outputs = json!({
        "certificate": res.certificate,
        "t": ops_json(&res.t),
        "p": mat(&res.p),
        "row_norms": res.row_norms,
    });
    if spec.params.embed.unwrap_or_else(|| all_nilpotent(phi)) {
        let r = spec.matrix_param(&spec.params.r, phi.d())?;
        let emb = model_embed(phi, &m, &r, &spec.constraints, degree(spec), tol)?;
        status = status.worst(emb.certificate.status);
        outputs["embedding"] = json!({ "certificate": emb.certificate, "a": emb.a, "b": emb.b });
    }
    Ok(Outcome { status, outputs })
}

fn cmd_solve(spec: &ProblemSpec, phi: &CpTuple, tol: &Tolerances) -> Result<Outcome> {
    let r = spec.matrix_param(&spec.params.r, phi.d())?;
    let sol = solve_defect_equation(phi, &spec.m(), &r, tol)?;
    Ok(Outcome {
        status: sol.certificate.status,
        outputs: json!({ "certificate": sol.certificate, "x_linear": mat(&sol.x_linear) }),
    })
}

fn cmd_sznagy(spec: &ProblemSpec, phi: &CpTuple, tol: &Tolerances, ov: Overrides) -> Result<Outcome> {
    let mut opts = SzNagyOptions::default();
    if let Some(n) = spec.params.max_iters {
        opts.max_iters = n;
    }
    if let Some(t) = ov.tol.or(spec.params.tolerances.map(|t| t.residual)) {
        opts.residual_tol = t;
    }
    let res = sznagy_solve(phi, &opts, tol)?;
    Ok(Outcome {
        status: res.certificate.status,
        outputs: json!({
            "certificate": res.certificate,
            "t": ops_json(&res.t),
            "c": res.c,
            "d": res.d,
            "doublings": res.doublings,
            "rounds": res.rounds,
            "fixed_space_dim": res.fixed_space_dim,
            "oracle_distance": res.oracle_distance,
            "algebra_distance": res.algebra_distance,
        }),
    })
}

fn cmd_vn(spec: &ProblemSpec, phi: &CpTuple, tol: &Tolerances) -> Result<Outcome> {
    let vn = spec
        .params
        .vn
        .as_ref()
        .ok_or_else(|| Error::Invalid("vn command needs params.vn".into()))?;
    let report = match vn.mode {
        VnMode::Polydisc => vn_check_polydisc(phi, &vn.matrix, vn.grid, tol.residual)?,
        VnMode::Model => {
            let d_pos = spec.matrix_param(&spec.params.x, phi.d())?;
            vn_check_model(phi, &spec.m(), &d_pos, &spec.constraints, &vn.matrix, degree(spec), tol)?
        }
    };
    let status = match report.verdict {
        VnVerdict::Pass => Status::Pass,
        VnVerdict::Fail => Status::Failed,
        VnVerdict::Inconclusive => Status::Inconclusive,
    };
    Ok(Outcome {
        status,
        outputs: json!({ "report": report }),
    })
}

fn cmd_cpsim(spec: &ProblemSpec, phi: &CpTuple, tol: &Tolerances) -> Result<Outcome> {
    let mode = match spec.params.mode.as_deref().unwrap_or("strict") {
        "strict" => CpSimMode::Strict,
        "unital" => CpSimMode::Unital,
        "pure_cone" => CpSimMode::PureCone,
        other => return Err(Error::Invalid(format!("unknown cpsim mode {other:?}"))),
    };
    let r = match &spec.params.r {
        Some(_) => Some(spec.matrix_param(&spec.params.r, phi.d())?),
        None => None,
    };
    let res = cpmap_similarity(phi, &spec.m(), mode, r.as_ref(), degree(spec), tol)?;
    let lambda = res.lambda.as_ref().map(|l| ops_json(l.operators()));
    Ok(Outcome {
        status: res.certificate.status,
        outputs: json!({ "mode": mode, "certificate": res.certificate, "q": mat(&res.q), "lambda": lambda }),
    })
}
