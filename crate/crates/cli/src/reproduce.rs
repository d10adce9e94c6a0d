//! Re-derives the three counterexamples and checks every number against
//! the values stated for them.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use structcons::consistency::{
    consistency_verdict, realization_residual, VerdictConfig, VerdictReport,
};
use structcons::distributions::fixture_witness;
use structcons::inference::map_inference;
use structcons::io::{distribution_from_json, parts_json, NumberJson, PartJson, SpaceJson};
use structcons::{
    Algo, Distribution, Fixture, LossKind, OutputSpace, OutputVector, PartId, ScoreVector, Status,
    Tag,
};

use crate::report::{read_input, to_value, Failure, Outcome, EXIT_MISMATCH, EXIT_OK};

struct Claim {
    fixture: Fixture,
    space: OutputSpace,
    loss: LossKind,
    /// Stated part marginals; the separable minimizer is their log.
    marginals: Vec<(PartId, f64)>,
    marginal_tolerance: f64,
    /// Stated score vector realizing the distribution under NLL.
    nll_assignment: Option<Vec<(PartId, f64)>>,
}

fn arc(head: usize, modifier: usize) -> PartId {
    PartId::Arc { head, modifier }
}

fn tag(position: usize, tag: Tag) -> PartId {
    PartId::Tag { position, tag }
}

fn claim(fixture: Fixture) -> Claim {
    match fixture {
        Fixture::NerBio2 => Claim {
            fixture,
            space: OutputSpace::bio(2).unwrap(),
            loss: LossKind::SepBio,
            marginals: vec![
                (tag(1, Tag::B), 0.65),
                (tag(1, Tag::O), 0.35),
                (tag(2, Tag::B), 0.4),
                (tag(2, Tag::I), 0.3),
                (tag(2, Tag::O), 0.3),
            ],
            marginal_tolerance: 1e-12,
            nll_assignment: Some(vec![
                (tag(1, Tag::B), 0.0),
                (tag(1, Tag::O), 0.0),
                (tag(2, Tag::B), 0.2f64.ln()),
                (tag(2, Tag::I), 0.3f64.ln()),
                (tag(2, Tag::O), 0.15f64.ln()),
            ]),
        },
        Fixture::DepMulti2 => Claim {
            fixture,
            space: OutputSpace::dep_multi(2).unwrap(),
            loss: LossKind::SepDep,
            marginals: vec![
                (arc(0, 1), 0.7),
                (arc(0, 2), 0.6),
                (arc(1, 2), 0.4),
                (arc(2, 1), 0.3),
            ],
            marginal_tolerance: 1e-12,
            nll_assignment: Some(vec![
                (arc(0, 1), 0.0),
                (arc(0, 2), 0.3f64.ln()),
                (arc(1, 2), 0.4f64.ln()),
                (arc(2, 1), 0.0),
            ]),
        },
        Fixture::DepSingle3 => Claim {
            fixture,
            space: OutputSpace::dep_single(3).unwrap(),
            loss: LossKind::SepDep,
            marginals: vec![
                (arc(0, 1), 0.55),
                (arc(1, 2), 0.55),
                (arc(1, 3), 0.4),
                (arc(2, 3), 0.45),
            ],
            marginal_tolerance: 1e-9,
            nll_assignment: None,
        },
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    expected: Value,
    computed: Value,
    ok: bool,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn close(&mut self, name: impl Into<String>, expected: f64, computed: f64, tol: f64) {
        self.0.push(Check {
            name: name.into(),
            expected: to_value(NumberJson::from(expected)),
            computed: to_value(NumberJson::from(computed)),
            ok: (expected - computed).abs() <= tol,
        });
    }

    fn at_most(&mut self, name: impl Into<String>, bound: f64, computed: f64) {
        self.0.push(Check {
            name: name.into(),
            expected: json!(format!("<= {bound:e}")),
            computed: to_value(NumberJson::from(computed)),
            ok: computed <= bound,
        });
    }

    fn equal(&mut self, name: impl Into<String>, expected: impl ToString, computed: impl ToString) {
        let (expected, computed) = (expected.to_string(), computed.to_string());
        self.0.push(Check {
            name: name.into(),
            ok: expected == computed,
            expected: json!(expected),
            computed: json!(computed),
        });
    }

    fn holds(&mut self, name: impl Into<String>, computed: bool) {
        self.0.push(Check {
            name: name.into(),
            expected: json!(true),
            computed: json!(computed),
            ok: computed,
        });
    }

    fn all_ok(&self) -> bool {
        self.0.iter().all(|c| c.ok)
    }
}

#[derive(Serialize)]
struct InnerProducts {
    a: Vec<PartJson>,
    b: Vec<PartJson>,
    score_a: NumberJson,
    score_b: NumberJson,
    gap: NumberJson,
}

#[derive(Serialize)]
struct FixtureResult {
    fixture: &'static str,
    source: String,
    digest: Option<String>,
    space: Option<SpaceJson>,
    inner_products: Option<InnerProducts>,
    separable: Option<VerdictReport>,
    nll: Option<VerdictReport>,
    nll_assignment_residual: Option<NumberJson>,
    checks: Vec<Check>,
    verified: bool,
}

fn load(
    fixture: Fixture,
    dir: Option<&Path>,
) -> Result<(Distribution, String, Option<String>), String> {
    match dir {
        None => structcons::builtin_fixture(fixture)
            .map(|d| (d, "builtin".to_string(), None))
            .map_err(|e| e.to_string()),
        Some(dir) => {
            let path = dir.join(fixture.file_name());
            let (text, hash) = read_input(&path).map_err(|f| f.message)?;
            let dist =
                distribution_from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok((dist, path.display().to_string(), Some(hash)))
        }
    }
}

fn run_fixture(
    claim: &Claim,
    dir: Option<&Path>,
    config: &VerdictConfig,
) -> Result<FixtureResult, Failure> {
    let mut checks = Checks::default();
    let mut result = FixtureResult {
        fixture: claim.fixture.name(),
        source: dir.map_or("builtin".into(), |d| {
            d.join(claim.fixture.file_name()).display().to_string()
        }),
        digest: None,
        space: None,
        inner_products: None,
        separable: None,
        nll: None,
        nll_assignment_residual: None,
        checks: Vec::new(),
        verified: false,
    };
    let dist = match load(claim.fixture, dir) {
        Ok((dist, source, digest)) => {
            result.source = source;
            result.digest = digest;
            dist
        }
        Err(message) => {
            checks.equal("fixture loads", "ok", message);
            result.checks = checks.0;
            return Ok(result);
        }
    };
    let space = *dist.space();
    result.space = Some((&space).into());
    let describe = |s: &OutputSpace| format!("{} n={}", s.kind(), s.n());
    checks.equal("space", describe(&claim.space), describe(&space));
    if space != claim.space {
        result.checks = checks.0;
        return Ok(result);
    }

    let mu = dist.marginals();
    for &(part, p) in &claim.marginals {
        checks.close(
            format!("p{part}"),
            p,
            mu.get(space.part_index(part)?),
            claim.marginal_tolerance,
        );
    }

    let separable = consistency_verdict(claim.loss, &dist, config)?;
    let w = &separable.minimizer;
    for &(part, p) in &claim.marginals {
        checks.close(
            format!("w{part}"),
            p.ln(),
            w.values()[space.part_index(part)?],
            1e-12,
        );
    }

    let (a, b) = fixture_witness(claim.fixture)?;
    let stated = |y: &OutputVector| -> f64 {
        y.part_ids()
            .iter()
            .map(|part| {
                claim
                    .marginals
                    .iter()
                    .find(|(q, _)| q == part)
                    .expect("stated part")
                    .1
                    .ln()
            })
            .sum()
    };
    let (score_a, score_b) = (w.score(&a), w.score(&b));
    checks.close(format!("<w,{a}>"), stated(&a), score_a, 1e-12);
    checks.close(format!("<w,{b}>"), stated(&b), score_b, 1e-12);
    checks.close(
        "<w,b> - <w,a>",
        stated(&b) - stated(&a),
        score_b - score_a,
        1e-12,
    );
    checks.holds("<w,a> < <w,b>", score_a < score_b);
    checks.equal("mode", a.to_string(), fmt_outputs(&dist.mode()));
    checks.holds("p(a) > p(b)", dist.probability(&a) > dist.probability(&b));
    checks.equal(
        format!("{} verdict", claim.loss),
        Status::Inconsistent,
        separable.status,
    );
    result.inner_products = Some(InnerProducts {
        a: parts_json(&a),
        b: parts_json(&b),
        score_a: score_a.into(),
        score_b: score_b.into(),
        gap: (score_b - score_a).into(),
    });

    if claim.fixture == Fixture::DepSingle3 {
        let (map, map_score) = map_inference(&space, w, Algo::Fast)?;
        checks.holds(
            format!("single-root MAP {map} beats a"),
            map != a && map_score > score_a,
        );
    } else if let Some(witness) = &separable.witness {
        checks.equal(
            "witness",
            format!("{a} vs {b}"),
            format!("{} vs {}", witness.a, witness.b),
        );
    }

    let nll = consistency_verdict(LossKind::Nll, &dist, config)?;
    if let Some(assignment) = &claim.nll_assignment {
        let mut values = vec![0.0; space.num_parts()];
        for &(part, v) in assignment {
            values[space.part_index(part)?] = v;
        }
        let residual = realization_residual(&dist, &ScoreVector::new(values)?)?;
        checks.at_most("stated NLL assignment residual", 1e-12, residual);
        checks.at_most(
            "least-squares NLL residual",
            1e-9,
            nll.residual.unwrap_or(f64::INFINITY),
        );
        checks.equal("nll verdict", Status::Consistent, nll.status);
        result.nll_assignment_residual = Some(residual.into());
    }

    result.separable = Some(separable.report());
    result.nll = Some(nll.report());
    result.verified = checks.all_ok();
    result.checks = checks.0;
    Ok(result)
}

fn fmt_outputs(ys: &[OutputVector]) -> String {
    ys.iter()
        .map(|y| y.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render(r: &FixtureResult, text: &mut String, diff: &mut String) {
    let _ = writeln!(text, "== {} [{}]", r.fixture, r.source);
    for c in &r.checks {
        let mark = if c.ok { "ok  " } else { "FAIL" };
        let _ = writeln!(
            text,
            "  {mark} {:<34} {}  (expected {})",
            c.name,
            fmt_value(&c.computed),
            fmt_value(&c.expected)
        );
        if !c.ok {
            let _ = writeln!(diff, "{}: {}", r.fixture, c.name);
            let _ = writeln!(diff, "- {}", fmt_value(&c.expected));
            let _ = writeln!(diff, "+ {}", fmt_value(&c.computed));
        }
    }
    for v in [&r.separable, &r.nll].into_iter().flatten() {
        let mut line = format!("  {}: {}", v.loss, v.status);
        if let Some(w) = &v.witness {
            let _ = write!(line, ", gap {}", fmt_value(&to_value(&v.gap)));
            let _ = write!(
                line,
                ", score_a {} score_b {}",
                fmt_value(&to_value(&w.score_a)),
                fmt_value(&to_value(&w.score_b))
            );
        }
        if v.flags.realizable == Some(false) {
            line.push_str(" (not realizable by part scores)");
        }
        if v.flags.empirical {
            line.push_str(" (empirical)");
        }
        let _ = writeln!(text, "{line}");
    }
    let _ = writeln!(
        text,
        "  {}",
        if r.verified {
            "verified"
        } else {
            "NOT verified"
        }
    );
}

pub fn run(
    target: Option<Fixture>,
    dir: Option<&Path>,
    config: &VerdictConfig,
) -> Result<Outcome, Failure> {
    let fixtures: Vec<Fixture> = match target {
        Some(f) => vec![f],
        None => Fixture::ALL.to_vec(),
    };
    let mut results = Vec::new();
    let (mut text, mut diff) = (String::new(), String::new());
    for f in fixtures {
        let r = run_fixture(&claim(f), dir, config)?;
        render(&r, &mut text, &mut diff);
        results.push(r);
    }
    let verified = results.iter().all(|r| r.verified);
    if !diff.is_empty() {
        eprint!("{diff}");
    }
    Ok(Outcome {
        code: if verified { EXIT_OK } else { EXIT_MISMATCH },
        digest: None,
        results: json!({ "verified": verified, "fixtures": to_value(&results) }),
        text,
    })
}
