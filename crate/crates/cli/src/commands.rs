use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde_json::json;

use qpi_core::config::{resolve_seed, InstanceConfig, VqlsSection};
use qpi_core::hhl::{gate_count_grid, grid_csv as gates_csv, reference_system, HhlConfig};
use qpi_core::lcu::{hermitian_embed, histogram_csv, lcu_decompose, lcu_histogram, lcu_truncate, EmbeddedSystem};
use qpi_core::mdp::{bellman_system_matrix, MdpInstance, Policy};
use qpi_core::policy_iteration::{policy_iteration, EvaluatorKind};
use qpi_core::qram::{feasibility_grid, grid_csv as qram_csv, log_space, parse_rate, QramHardwareParams};
use qpi_core::sparse::SparseMatrix;
use qpi_core::vqls::{vqls_solve, AnsatzConfig, TrainTrace};

use crate::{parse_log_base, Backend, Command, EntanglerArg, Failure, Format, Output};

type Outcome = Result<(), Failure>;

pub(crate) fn run(command: Command) -> Outcome {
    match command {
        Command::Solve {
            instance,
            evaluator,
            gamma,
            max_iters,
            output,
        } => solve(&instance, evaluator, gamma, max_iters, &output),
        Command::Lcu {
            instance,
            policy,
            terms,
            matrix,
            output,
        } => lcu(instance.as_deref(), policy.as_deref(), terms, matrix.as_deref(), &output),
        Command::Gates { n_max, l_list, output } => gates(n_max, &l_list, &output),
        Command::Qram {
            n_range,
            fidelity_range,
            gd,
            nu,
            cd,
            log_base,
            output,
        } => qram(&n_range, &fidelity_range, &gd, &nu, cd, &log_base, &output),
        Command::Vqls {
            instance,
            policy,
            matrix,
            rhs,
            layers,
            terms,
            learning_rate,
            max_iters,
            target_cost,
            entangler,
            noise,
            trajectories,
            output,
        } => {
            let system = match (matrix, instance) {
                (Some(m), _) => SystemSource::Matrix(m, rhs.unwrap_or_default()),
                (None, Some(i)) => SystemSource::Instance(i, policy),
                (None, None) => return Err(Failure::Config("need an instance file or --matrix".into())),
            };
            let overrides = VqlsOverrides {
                layers,
                terms,
                learning_rate,
                max_iters,
                target_cost,
                entangler,
                noise,
                trajectories,
            };
            vqls(system, &overrides, &output)
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn write_artifact(output: &Output, name: &str, contents: &str) -> Outcome {
    fs::create_dir_all(&output.out_dir).map_err(|e| config_err(format!("{}: {e}", output.out_dir.display())))?;
    let path = output.out_dir.join(name);
    fs::write(&path, contents).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn artifact_name(stem: &str, format: Format) -> String {
    match format {
        Format::Csv => format!("{stem}.csv"),
        Format::Json => format!("{stem}.json"),
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

fn load(path: &Path) -> Result<InstanceConfig, Failure> {
    Ok(InstanceConfig::load(path)?)
}

/// Comma-separated actions, or a JSON file holding an array or `{"policy": [...]}`.
fn parse_policy(text: &str, mdp: &MdpInstance) -> Result<Policy, Failure> {
    let actions: Vec<usize> = if text.ends_with(".json") {
        let raw = fs::read_to_string(text).map_err(|e| config_err(format!("{text}: {e}")))?;
        let value: serde_json::Value = serde_json::from_str(&raw).map_err(|e| config_err(format!("{text}: {e}")))?;
        let list = value.get("policy").unwrap_or(&value);
        serde_json::from_value(list.clone()).map_err(|e| config_err(format!("{text}: policy: {e}")))?
    } else {
        text.split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|e| config_err(format!("--policy: {e}")))?
    };
    if actions.len() != mdp.n_states() {
        return Err(config_err(format!(
            "--policy: expected {} actions, got {}",
            mdp.n_states(),
            actions.len()
        )));
    }
    Ok(Policy::new(actions, mdp.n_actions())?)
}

fn read_matrix(path: &Path) -> Result<SparseMatrix, Failure> {
    let file = fs::File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    SparseMatrix::from_coo_csv(BufReader::new(file), None)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))
}

enum SystemSource {
    Instance(PathBuf, Option<String>),
    Matrix(PathBuf, Vec<f64>),
}

/// The embedded system plus the seed the instance file asks for.
fn embedded_system(source: &SystemSource) -> Result<(EmbeddedSystem, Option<InstanceConfig>), Failure> {
    match source {
        SystemSource::Matrix(path, rhs) => {
            let b = read_matrix(path)?;
            Ok((hermitian_embed(&b, rhs)?, None))
        }
        SystemSource::Instance(path, policy) => {
            let cfg = load(path)?;
            let mdp = cfg.build()?;
            let policy = match policy {
                Some(p) => parse_policy(p, &mdp)?,
                None => Policy::constant(mdp.n_states(), 0),
            };
            let b = bellman_system_matrix(&mdp, &policy, cfg.gamma)?;
            Ok((hermitian_embed(&b, mdp.reward())?, Some(cfg)))
        }
    }
}

fn solve(instance: &Path, backend: Backend, gamma: Option<f64>, max_iters: usize, output: &Output) -> Outcome {
    let mut cfg = load(instance)?;
    if let Some(g) = gamma {
        cfg.gamma = g;
    }
    let seed = resolve_seed(output.seed.or(cfg.seed))?;
    let mdp = cfg.build()?;
    let evaluator = match backend {
        Backend::Exact => EvaluatorKind::Exact,
        Backend::Hhl => EvaluatorKind::Hhl(HhlConfig {
            seed,
            ..cfg.hhl.clone().unwrap_or_default()
        }),
        Backend::Vqls => EvaluatorKind::Vqls(cfg.vqls.clone().unwrap_or_default().to_evaluator(seed)?),
    };
    let (policy, trace) = policy_iteration(&mdp, cfg.gamma, max_iters, &evaluator)?;

    let summary = json!({
        "converged": trace.converged,
        "evaluator": evaluator.name(),
        "gamma": cfg.gamma,
        "iterations": trace.records.len(),
        "policy": policy,
    });
    write_artifact(output, "policy.json", &pretty(&summary))?;
    write_artifact(output, "trace.jsonl", &trace.to_jsonl())?;

    println!("{:>4}  {:>10}  {:>8}", "k", "residual", "changed");
    for r in &trace.records {
        println!("{:>4}  {:>10.3e}  {:>8}", r.k, r.residual, r.changed_states);
    }
    println!();
    println!("{:>5}  {:>5}", "state", "order");
    for (s, a) in policy.actions().iter().enumerate() {
        println!("{s:>5}  {a:>5}");
    }
    if !trace.converged {
        eprintln!("warning: policy still changing after {max_iters} iterations");
    }
    Ok(())
}

fn lcu(
    instance: Option<&Path>,
    policy: Option<&str>,
    terms: Option<usize>,
    matrix: Option<&Path>,
    output: &Output,
) -> Outcome {
    let source = match (matrix, instance) {
        (Some(m), _) => {
            let b = read_matrix(m)?;
            let ones = vec![1.0; b.rows()];
            hermitian_embed(&b, &ones)?
        }
        (None, Some(i)) => embedded_system(&SystemSource::Instance(i.to_path_buf(), policy.map(String::from)))?.0,
        (None, None) => return Err(config_err("need an instance file or --matrix")),
    };
    let full = lcu_decompose(&source.h)?;
    let kept = match terms {
        Some(l) => lcu_truncate(&full, l)?,
        None => full.clone(),
    };

    let histogram = lcu_histogram(&kept);
    match output.format {
        Format::Csv => {
            write_artifact(output, "lcu.csv", &histogram_csv(&histogram))?;
            write_artifact(output, "lcu_terms.csv", &kept.to_csv())?;
        }
        Format::Json => {
            let terms: Vec<_> = kept
                .terms()
                .iter()
                .map(|t| json!({"pauli_string": t.pauli.to_string(), "coefficient": t.coefficient}))
                .collect();
            let doc = json!({
                "n_qubits": kept.n_qubits(),
                "terms": terms,
                "truncation_error": kept.truncation_error(),
            });
            write_artifact(output, "lcu.json", &pretty(&doc))?;
        }
    }
    println!("qubits            {}", kept.n_qubits());
    println!("terms kept        {} of {}", kept.len(), full.len());
    println!("truncation error  {:.6e}", kept.truncation_error());
    println!("parseval residual {:.3e}", full.parseval_residual());
    Ok(())
}

fn gates(n_max: usize, l_list: &[usize], output: &Output) -> Outcome {
    let (b, r) = reference_system()?;
    let cells = gate_count_grid(&b, &r, n_max, l_list, &HhlConfig::default())?;
    match output.format {
        Format::Csv => write_artifact(output, "gates.csv", &gates_csv(&cells))?,
        Format::Json => write_artifact(output, "gates.json", &pretty(&json!(cells)))?,
    }
    let mut header = format!("{:>3}", "N");
    for l in l_list {
        let _ = write!(header, " {:>10}", format!("L={l}"));
    }
    println!("{header}");
    for n in 1..=n_max {
        let mut line = format!("{n:>3}");
        for c in cells.iter().filter(|c| c.n_qubits == n) {
            let cell = c.gates.map_or_else(|| "x".to_string(), |g| g.to_string());
            let _ = write!(line, " {cell:>10}");
        }
        println!("{line}");
    }
    Ok(())
}

fn parse_range(flag: &str, text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let bad = || config_err(format!("--{flag}: expected `lo:hi:count`, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    log_space(lo, hi, count).map_err(|e| config_err(format!("--{flag}: {e}")))
}

#[allow(clippy::too_many_arguments)]
fn qram(n_range: &str, fidelity_range: &str, gd: &str, nu: &str, cd: f64, log_base: &str, output: &Output) -> Outcome {
    let sizes = parse_range("n-range", n_range)?;
    let infidelities = parse_range("fidelity-range", fidelity_range)?;
    let base = parse_log_base(log_base)?;
    let hw = QramHardwareParams {
        g_d: parse_rate(gd)?,
        nu: parse_rate(nu)?,
        c_d: cd,
        kappa_plus_gamma: 0.0,
    };
    let rows = feasibility_grid(&sizes, &infidelities, &hw, base)?;
    match output.format {
        Format::Csv => write_artifact(output, "qram.csv", &qram_csv(&rows))?,
        Format::Json => write_artifact(output, "qram.json", &pretty(&json!(rows)))?,
    }

    println!("coupling floor (g_d/nu)^2 = {:.4e}   log base {}", hw.error_floor(), base.name());
    let feasible = rows.iter().filter(|r| r.feasible()).count();
    println!("{feasible} of {} grid points feasible", rows.len());
    for r in rows.iter().filter(|r| r.highlighted) {
        let budget = match r.kappa_plus_gamma {
            Some(k) => format!("{k:.4e} rad/s = {:.4e} Hz", k / std::f64::consts::TAU),
            None => "infeasible".to_string(),
        };
        println!(
            "N = {:.3e}  1-F = {:.3e}  eps = {:.4e}  kappa+gamma <= {budget}",
            r.n, r.one_minus_f, r.epsilon
        );
    }
    if feasible == 0 {
        return Err(Failure::Infeasible(format!(
            "every grid point needs an error rate below the coupling floor {:.3e}",
            hw.error_floor()
        )));
    }
    Ok(())
}

struct VqlsOverrides {
    layers: Option<usize>,
    terms: Option<usize>,
    learning_rate: Option<f64>,
    max_iters: Option<usize>,
    target_cost: Option<f64>,
    entangler: EntanglerArg,
    noise: Option<f64>,
    trajectories: Option<usize>,
}

impl VqlsOverrides {
    fn apply(&self, mut s: VqlsSection) -> VqlsSection {
        s.layers = self.layers.unwrap_or(s.layers);
        s.terms = self.terms.or(s.terms);
        s.learning_rate = self.learning_rate.unwrap_or(s.learning_rate);
        s.max_iters = self.max_iters.unwrap_or(s.max_iters);
        s.target_cost = self.target_cost.unwrap_or(s.target_cost);
        s.noise = self.noise.unwrap_or(s.noise);
        s.trajectories = self.trajectories.unwrap_or(s.trajectories);
        s
    }
}

fn trace_table(clean: &TrainTrace, noisy: Option<&TrainTrace>, format: Format) -> String {
    match format {
        Format::Json => pretty(&json!({
            "noiseless": clean.records,
            "noisy": noisy.map(|t| &t.records),
        })),
        Format::Csv => {
            let Some(noisy) = noisy else {
                return clean.to_csv();
            };
            let mut out = String::from("iter,cost,grad_norm,noisy_cost,noisy_grad_norm\n");
            let rows = clean.records.len().max(noisy.records.len());
            for i in 0..rows {
                let (a, b) = (clean.records.get(i), noisy.records.get(i));
                let pair = |r: Option<&qpi_core::vqls::TraceRecord>| {
                    r.map_or_else(|| ",".to_string(), |r| format!("{},{}", r.cost, r.grad_norm))
                };
                let _ = writeln!(out, "{i},{},{}", pair(a), pair(b));
            }
            out
        }
    }
}

fn vqls(source: SystemSource, overrides: &VqlsOverrides, output: &Output) -> Outcome {
    let (sys, instance) = embedded_system(&source)?;
    let seed = resolve_seed(output.seed.or(instance.as_ref().and_then(|c| c.seed)))?;
    let section = overrides.apply(instance.and_then(|c| c.vqls).unwrap_or_default());

    let full = lcu_decompose(&sys.h)?;
    let lcu = match section.terms {
        Some(l) => lcu_truncate(&full, l)?,
        None => full,
    };
    let ansatz = AnsatzConfig::new(sys.n_qubits, section.layers).with_entangler(overrides.entangler.into());

    let clean_cfg = VqlsSection {
        noise: 0.0,
        ..section.clone()
    }
    .to_config(seed)?;
    let (x, clean) = vqls_solve(&lcu, &sys.rhs, &ansatz, &clean_cfg)?;
    let noisy = if section.noise > 0.0 {
        let cfg = section.to_config(seed)?;
        Some(vqls_solve(&lcu, &sys.rhs, &ansatz, &cfg)?.1)
    } else {
        None
    };

    write_artifact(output, &artifact_name("trace", output.format), &trace_table(&clean, noisy.as_ref(), output.format))?;
    println!(
        "noiseless: cost {:.4e} -> {:.4e} in {} iterations{}",
        clean.initial_cost(),
        clean.final_cost(),
        clean.records.len() - 1,
        if clean.converged { " (target reached)" } else { "" }
    );
    if let Some(t) = &noisy {
        println!(
            "noisy (p = {}): cost {:.4e} -> {:.4e}",
            section.noise,
            t.initial_cost(),
            t.final_cost()
        );
    }
    let solution = sys.extract_solution(&x);
    let shown: Vec<String> = solution.iter().map(|v| format!("{v:.4}")).collect();
    println!("solution block: [{}]", shown.join(", "));
    Ok(())
}
