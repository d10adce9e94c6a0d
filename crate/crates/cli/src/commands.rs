use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use structcons::consistency::{
    consistency_verdict, search_counterexamples, ConsistencyVerdict, SearchConfig, VerdictConfig,
    WitnessReport,
};
use structcons::inference::{map_inference, marginal_inference};
use structcons::io::{
    distribution_from_json, parts_json, save_distribution, scores_from_json, NumberJson, PartJson,
    SpaceJson,
};
use structcons::{Algo, LossKind, OutputSpace, SpaceKind, Status};

use crate::report::{
    read_input, to_value, Failure, Outcome, EXIT_INCONSISTENT, EXIT_NOTHING_FOUND, EXIT_OK,
    EXIT_UNDETERMINED,
};

fn num(x: f64) -> String {
    match NumberJson::from(x) {
        NumberJson::Num(v) => v.to_string(),
        NumberJson::Text(s) => s,
    }
}

fn render_verdict(v: &ConsistencyVerdict) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} on {} n={}: {}",
        v.kind,
        v.space.kind(),
        v.space.n(),
        v.status
    );
    let _ = writeln!(out, "minimizer:");
    for (c, &x) in v.minimizer.values().iter().enumerate() {
        let _ = writeln!(
            out,
            "  w{} = {}",
            v.space.part_of_index(c).expect("index in range"),
            num(x)
        );
    }
    let list = |ys: &[structcons::OutputVector]| {
        ys.iter()
            .map(|y| y.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "modes: {}", list(&v.modes));
    let _ = writeln!(out, "argmax: {}", list(&v.argmax));
    if let Some(w) = &v.witness {
        let _ = writeln!(
            out,
            "witness: a = {} (p {}, score {})",
            w.a,
            num(w.p_a),
            num(w.score_a)
        );
        let _ = writeln!(
            out,
            "         b = {} (p {}, score {})",
            w.b,
            num(w.p_b),
            num(w.score_b)
        );
    }
    let _ = writeln!(out, "gap: {}", num(v.gap));
    if let Some(r) = v.residual {
        let _ = writeln!(out, "realization residual: {}", num(r));
    }
    if v.empirical {
        let _ = writeln!(
            out,
            "minimizer is numerical (empirical verdict, converged: {})",
            v.converged
        );
    }
    out
}

pub fn check(path: &Path, loss: LossKind, config: &VerdictConfig) -> Result<Outcome, Failure> {
    let (text, digest) = read_input(path)?;
    let dist = distribution_from_json(&text)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let verdict = consistency_verdict(loss, &dist, config)?;
    let code = match verdict.status {
        Status::Consistent => EXIT_OK,
        Status::Inconsistent => EXIT_INCONSISTENT,
        Status::Undetermined => EXIT_UNDETERMINED,
    };
    Ok(Outcome {
        code,
        digest: Some(digest),
        results: to_value(verdict.report()),
        text: render_verdict(&verdict),
    })
}

#[derive(Serialize)]
struct FoundJson {
    trial: usize,
    file: Option<String>,
    gap: NumberJson,
    empirical: bool,
    witness: Option<WitnessReport>,
}

#[derive(Serialize)]
struct SearchSummary {
    space: SpaceJson,
    loss: LossKind,
    trials: usize,
    seed: u64,
    alpha: f64,
    found: usize,
    /// Counterexamples whose minimizer is exact (closed form or realized).
    found_exact: usize,
    exact_draws: usize,
    undetermined: usize,
    counterexamples: Vec<FoundJson>,
}

pub fn search(
    space: &OutputSpace,
    loss: LossKind,
    config: &SearchConfig,
    out: Option<&Path>,
) -> Result<Outcome, Failure> {
    let outcome = search_counterexamples(loss, space, config)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    }
    let mut found = Vec::new();
    for c in &outcome.counterexamples {
        let file = match out {
            Some(dir) => {
                let name = format!("counterexample_{:06}.json", c.trial);
                save_distribution(&c.dist, dir.join(&name))?;
                Some(name)
            }
            None => None,
        };
        let report = c.verdict.report();
        found.push(FoundJson {
            trial: c.trial,
            file,
            gap: report.gap,
            empirical: c.verdict.empirical,
            witness: report.witness,
        });
    }
    let summary = SearchSummary {
        space: space.into(),
        loss,
        trials: outcome.trials,
        seed: config.seed,
        alpha: config.alpha,
        found: found.len(),
        found_exact: outcome.exact_counterexamples().count(),
        exact_draws: outcome.exact_draws,
        undetermined: outcome.undetermined,
        counterexamples: found,
    };
    if let Some(dir) = out {
        let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        text.push('\n');
        std::fs::write(dir.join("summary.json"), text)
            .map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
        eprintln!(
            "wrote {} counterexample file(s) to {}",
            summary.found,
            dir.display()
        );
    }

    let mut text = String::new();
    let _ = writeln!(
        text,
        "{} on {} n={}: {} of {} draws inconsistent ({} with exact minimizer, {} undetermined)",
        loss,
        space.kind(),
        space.n(),
        summary.found,
        summary.trials,
        summary.found_exact,
        summary.undetermined
    );
    for (c, f) in outcome.counterexamples.iter().zip(&summary.counterexamples) {
        if let Some(w) = &c.verdict.witness {
            let _ = writeln!(
                text,
                "  trial {:>6}: a = {} beaten by b = {}, gap {}",
                f.trial,
                w.a,
                w.b,
                num(c.verdict.gap)
            );
        }
    }
    let code = if summary.found > 0 || (loss == LossKind::Nll && summary.trials > 0) {
        EXIT_OK
    } else {
        EXIT_NOTHING_FOUND
    };
    Ok(Outcome {
        code,
        digest: None,
        results: to_value(&summary),
        text,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum InferMode {
    Map,
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum AlgoArg {
    /// Dynamic programs and spanning-tree algorithms.
    Auto,
    Brute,
    Fast,
}

pub fn infer(
    mode: InferMode,
    path: &Path,
    algo: AlgoArg,
    expect_kind: Option<SpaceKind>,
    expect_n: Option<usize>,
) -> Result<Outcome, Failure> {
    let (text, digest) = read_input(path)?;
    let (space, w) =
        scores_from_json(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    if expect_kind.is_some_and(|k| k != space.kind()) || expect_n.is_some_and(|n| n != space.n()) {
        return Err(Failure::data(format!(
            "{}: scores are for {} n={}, not the requested space",
            path.display(),
            space.kind(),
            space.n()
        )));
    }
    let algo_used = match algo {
        AlgoArg::Brute => Algo::Brute,
        AlgoArg::Auto | AlgoArg::Fast => Algo::Fast,
    };
    let algo_name = if algo_used == Algo::Brute {
        "brute"
    } else {
        "fast"
    };
    let space_json = SpaceJson::from(&space);
    let (results, text) = match mode {
        InferMode::Map => {
            let (y, score) = map_inference(&space, &w, algo_used)?;
            let text = format!("{y}\nscore {}\n", num(score));
            let results = json!({
                "space": to_value(space_json),
                "algo": algo_name,
                "output": to_value(parts_json(&y)),
                "display": y.to_string(),
                "score": to_value(NumberJson::from(score)),
            });
            (results, text)
        }
        InferMode::Marginal => {
            let m = marginal_inference(&space, &w, algo_used)?;
            let mut text = String::new();
            let mut entries = Vec::new();
            for (c, &mu) in m.mu.values().iter().enumerate() {
                let part = space.part_of_index(c)?;
                let _ = writeln!(text, "mu{part} = {}", num(mu));
                entries.push(json!({ "part": to_value(PartJson::from(part)), "value": to_value(NumberJson::from(mu)) }));
            }
            let _ = writeln!(text, "log partition {}", num(m.log_partition));
            let results = json!({
                "space": to_value(space_json),
                "algo": algo_name,
                "marginals": entries,
                "log_partition": to_value(NumberJson::from(m.log_partition)),
            });
            (results, text)
        }
    };
    Ok(Outcome {
        code: EXIT_OK,
        digest: Some(digest),
        results,
        text,
    })
}

pub fn enumerate(space: &OutputSpace) -> Result<Outcome, Failure> {
    let ys = space.enumerate()?;
    let mut text = String::new();
    let mut outputs = Vec::with_capacity(ys.len());
    for (i, y) in ys.iter().enumerate() {
        let _ = writeln!(text, "{i:>6}  {y}");
        outputs.push(parts_json(y));
    }
    Ok(Outcome {
        code: EXIT_OK,
        digest: None,
        results: json!({ "space": to_value(SpaceJson::from(space)), "count": ys.len(), "outputs": to_value(outputs) }),
        text,
    })
}
