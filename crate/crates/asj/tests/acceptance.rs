//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion with
//! the measured values. The exit status follows criteria 2, 5 and 8; the
//! detector-quality criteria are reported without failing the run.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use asj::io::save_png;
use asj_core::eval::scene::{chain_spec, random_wireframe_spec, CHAIN_FIRST};
use asj_core::eval::{
    branch_recovery, false_alarm_counts, gen_matching_pair, gen_noise_image, gen_wireframe_scene, match_metrics,
    repeatability, CorrespondenceCriteria,
};
use asj_core::math::{angular_distance, hypot};
use asj_core::matching::{
    canonical_order, decompose_all, endpoints, estimate_affine, match_junctions, AffineMap, LJunction, MatchParams,
};
use asj_core::scale::{detect_asj, Branch, DetectParams};
use asj_core::stats::{convolve_self, NullModel, TabulatedDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, gating: bool, started: Instant, o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    let note = if gating { "" } else { " [reported]" };
    // written to the raw handle so the line shows without --nocapture
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id} {tag}{note}: {name}: {} ({:.1} s)",
        o.detail,
        started.elapsed().as_secs_f64()
    );
}

fn false_alarms() -> Outcome {
    let eps = [0.01, 0.1, 1.0, 10.0];
    let params = DetectParams::default();
    let mut sum = [0usize; 4];
    let seeds = 100;
    for s in 0..seeds {
        let img = gen_noise_image(s, 256, 256).unwrap().image;
        for (acc, c) in sum.iter_mut().zip(false_alarm_counts(&img, &eps, 1000 + s, &params).unwrap()) {
            *acc += c;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|&c| c as f64 / seeds as f64).collect();
    let bounded = eps.iter().zip(&mean).all(|(e, m)| *m <= e + 0.05);
    let order = (0.01..=1.0).contains(&mean[2]);
    Outcome { pass: bounded && order, detail: format!("eps {eps:?} mean {mean:?}") }
}

fn angular_factor(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random_range(0.0..2.0 * PI);
    (u.cos().abs() - u.sin().abs()).max(0.0)
}

fn draw(model: NullModel, rng: &mut ChaCha8Rng) -> f64 {
    let magnitude = match model {
        NullModel::Elementary => {
            let (x, y): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            x.hypot(y)
        }
        NullModel::Modified => rng.sample(StandardNormal),
    };
    magnitude * angular_factor(rng)
}

fn ks(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn continuous_cdf(d: &TabulatedDistribution, t: f64) -> f64 {
    let atom_above = if t > 0.0 { d.atom() } else { 0.0 };
    (1.0 - d.tail_probability(t) - atom_above) / (1.0 - d.atom())
}

fn distributions() -> Outcome {
    const N: usize = 1_000_000;
    let mut pass = true;
    let mut detail = Vec::new();
    for (k, model) in [NullModel::Elementary, NullModel::Modified].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(10 + k as u64);
        let samples: Vec<f64> = (0..N).map(|_| draw(model, &mut rng)).collect();
        let atom = samples.iter().filter(|&&x| x == 0.0).count() as f64 / N as f64;
        let mut cont: Vec<f64> = samples.into_iter().filter(|&x| x != 0.0).collect();
        cont.sort_by(f64::total_cmp);
        let d = model.base();
        let ks1 = ks(&cont, |t| continuous_cdf(d, t));
        let mut sums: Vec<f64> = (0..N).map(|_| (0..16).map(|_| draw(model, &mut rng)).sum()).collect();
        sums.sort_by(f64::total_cmp);
        let d16 = convolve_self(d, 16);
        let ks16 = ks(&sums, |t| 1.0 - d16.tail_probability(t));
        pass &= (atom - 0.5).abs() < 0.002 && ks1 < 0.01 && ks16 < 0.01;
        detail.push(format!("{model:?} atom {atom:.4} KS {ks1:.4} KS(J=16) {ks16:.4}"));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn scale_recovery() -> Outcome {
    let params = DetectParams::default();
    let (mut hit, mut total) = (0, 0);
    for s in 0..20 {
        let sc = gen_wireframe_scene(&random_wireframe_spec(s, 0.05), s).unwrap();
        let det = detect_asj(&sc.image, &params).unwrap();
        let (r, t) = branch_recovery(&sc.gt_junctions, &det, 3.0, 3.0, PI / 36.0);
        hit += r;
        total += t;
    }
    let rate = hit as f64 / total as f64;
    Outcome { pass: rate >= 0.9, detail: format!("{hit}/{total} branches = {rate:.3}, need 0.9") }
}

fn chain() -> Outcome {
    let params = DetectParams::default();
    let mut ok = 0;
    for s in 0..20 {
        let sc = gen_wireframe_scene(&chain_spec(0.05), s).unwrap();
        let near = |c: (f64, f64)| hypot(c.0 - CHAIN_FIRST.0, c.1 - CHAIN_FIRST.1) < 3.0;
        let gt = sc.gt_junctions.iter().find(|j| near(j.center)).unwrap();
        let through = gt.branches.iter().max_by(|a, b| a.scale.total_cmp(&b.scale)).unwrap();
        let det = detect_asj(&sc.image, &params).unwrap();
        let found = det.iter().filter(|d| near(d.center)).flat_map(|d| &d.branches).any(|b| {
            angular_distance(b.orientation, through.orientation) < PI / 20.0 && (b.scale - through.scale).abs() < 3.0
        });
        ok += found as usize;
    }
    Outcome { pass: ok >= 18, detail: format!("{ok}/20 realizations, need 18") }
}

fn dlt() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_h, mut worst_res) = (0.0f64, 0.0f64);
    let mut n = 0;
    while n < 1000 {
        let t1 = rng.random_range(0.0..2.0 * PI);
        let b1 = Branch { orientation: t1, scale: rng.random_range(10.0..80.0), nfa: 0.0 };
        let b2 = Branch { orientation: (t1 + rng.random_range(0.3..PI - 0.3)) % (2.0 * PI), scale: rng.random_range(10.0..80.0), nfa: 0.0 };
        let (b1, b2) = canonical_order(b1, b2).unwrap();
        let lp = LJunction { center: (rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)), branch1: b1, branch2: b2, parent: 0 };
        let (a, sx, sy, sh) = (rng.random_range(-PI..PI), rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(-0.5..0.5));
        let (c, s) = (a.cos(), a.sin());
        let g = AffineMap::new([c * sx, -s * sy + sh, rng.random_range(-100.0..100.0), s * sx, c * sy, rng.random_range(-100.0..100.0)]);
        if g.det() < 0.1 {
            continue;
        }
        let map = |b: &Branch| {
            let (dx, dy) = g.apply_linear((b.orientation.cos(), b.orientation.sin()));
            Branch { orientation: g.map_direction(b.orientation), scale: b.scale * hypot(dx, dy), nfa: 0.0 }
        };
        let (q1, q2) = canonical_order(map(&lp.branch1), map(&lp.branch2)).unwrap();
        let lq = LJunction { center: g.apply(lp.center), branch1: q1, branch2: q2, parent: 0 };
        let h = estimate_affine(&lp, &lq).unwrap();
        worst_h = h.h.iter().zip(g.h).map(|(x, y)| (x - y).abs()).fold(worst_h, f64::max);
        for (p, q) in endpoints(&lp).into_iter().zip(endpoints(&lq)) {
            let m = h.apply(p);
            worst_res = worst_res.max(hypot(m.0 - q.0, m.1 - q.1));
        }
        n += 1;
    }
    Outcome {
        pass: worst_h < 1e-9 && worst_res < 1e-9,
        detail: format!("1000 pairs, max |H - G| {worst_h:.2e}, max residual {worst_res:.2e}"),
    }
}

fn scale_covariance() -> Outcome {
    let params = DetectParams::default();
    let criteria = CorrespondenceCriteria::default();
    let factors = [0.9, 0.8, 0.7, 0.6, 0.5];
    let mut matched = [0usize; 5];
    let mut consistent = [0usize; 5];
    for seed in 0..3 {
        let sc = gen_wireframe_scene(&random_wireframe_spec(seed, 0.02), seed).unwrap();
        let a = detect_asj(&sc.image, &params).unwrap();
        for (k, &s) in factors.iter().enumerate() {
            let b = detect_asj(&sc.image.rescale_bicubic(s).unwrap(), &params).unwrap();
            let r = repeatability(&a, &b, s, &criteria);
            matched[k] += r.matched;
            consistent[k] += r.scale_consistent;
        }
    }
    let rates: Vec<f64> = matched.iter().zip(&consistent).map(|(&m, &c)| c as f64 / m.max(1) as f64).collect();
    let shown: Vec<String> = factors.iter().zip(&rates).map(|(s, r)| format!("{s}: {r:.2}")).collect();
    Outcome { pass: rates.iter().all(|&r| r >= 0.8), detail: format!("scale-consistent share {}, need 0.8", shown.join(", ")) }
}

fn matching() -> Outcome {
    let params = DetectParams::default();
    let criteria = CorrespondenceCriteria::default();
    let mut pass = true;
    let mut detail = Vec::new();
    for seed in 0..3 {
        let (p, q) = gen_matching_pair(seed, 0.02).unwrap();
        let ap = detect_asj(&p.image, &params).unwrap();
        let aq = detect_asj(&q.image, &params).unwrap();
        let pairs = match_junctions(&ap, &aq, &p.image, &q.image, &MatchParams::default());
        let m = match_metrics(&pairs, &decompose_all(&ap), &decompose_all(&aq), &q.gt_transform.unwrap(), &criteria);
        pass &= m.precision >= 0.9 && m.correct >= 10;
        detail.push(format!("pair {seed}: {}/{} precision {:.2}", m.correct, m.total, m.precision));
    }
    Outcome { pass, detail: format!("{}, need 0.9 and 10 correct", detail.join("; ")) }
}

fn determinism(dir: &Path) -> Outcome {
    let (p, q) = gen_matching_pair(7, 0.02).unwrap();
    let (a, b) = (dir.join("a.png"), dir.join("b.png"));
    save_png(&p.image, &a).unwrap();
    save_png(&q.image, &b).unwrap();
    let run = |args: &[&Path]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_asj"));
        cmd.env("ASJ_THREADS", "1");
        for a in args {
            cmd.arg(a);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let detect = Path::new("detect");
    let matching = Path::new("match");
    let d = run(&[detect, &a]) == run(&[detect, &a]);
    let m = run(&[matching, &a, &b]) == run(&[matching, &a, &b]);
    Outcome { pass: d && m, detail: format!("detect identical: {d}, match identical: {m}") }
}

fn main() {
    // `cargo test -- --list` and filters from the default harness
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let criteria: [(&str, bool, Box<dyn Fn() -> Outcome>); 8] = [
        ("false alarms on Gaussian noise", false, Box::new(false_alarms)),
        ("null distributions against Monte Carlo", true, Box::new(distributions)),
        ("branch scale recovery on wireframe scenes", false, Box::new(scale_recovery)),
        ("collinear chain through-branch", false, Box::new(chain)),
        ("affine estimation from L-junction pairs", true, Box::new(dlt)),
        ("scale covariance under rescaling", false, Box::new(scale_covariance)),
        ("matching precision on warped pairs", false, Box::new(matching)),
        ("byte-identical CLI output", true, Box::new(move || determinism(dir.path()))),
    ];
    let mut failed = Vec::new();
    for (i, (name, gating, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = run();
        report(i + 1, name, *gating, started, &o);
        if *gating && !o.pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("acceptance failed: criteria {failed:?}");
        std::process::exit(1);
    }
}
