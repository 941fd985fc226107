//! One-command reproduction of the pinned experiments. Each fixture runs
//! its experiment with the seeds and thresholds of the acceptance suite
//! and prints one pass/fail line per check.

use curtain_core::curtain::{curtain_atomic, support_distance_lb};
use curtain_core::peacock::{
    chain_compose, jump_statistics, sample_paths, transition, uniform_exp_kernel, Partition,
    Peacock,
};
use curtain_core::rng::CounterRng;
use curtain_core::shadow::{pad_left, shadow_atomic};
use curtain_core::Measure;

pub const FIXTURES: [&str; 5] =
    ["wass-plouf", "uniform-poisson", "threepoint", "stocking", "lips-suite"];

fn report(name: &str, ok: bool, detail: String) -> bool {
    println!("{name}: {} ({detail})", if ok { "pass" } else { "FAIL" });
    ok
}

pub fn run(name: &str) -> Option<bool> {
    match name {
        "wass-plouf" => Some(wass_plouf()),
        "uniform-poisson" => Some(uniform_poisson()),
        "threepoint" => Some(threepoint()),
        "stocking" => Some(stocking()),
        "lips-suite" => Some(lips_suite()),
        _ => None,
    }
}

fn wass_plouf() -> bool {
    let eps = 1e-3;
    let mut all = true;
    for n in [4usize, 8, 16, 32] {
        let mu = Measure::from_atoms(&(0..n).map(|k| (k as f64, 1.0)).collect::<Vec<_>>());
        let mut atoms: Vec<(f64, f64)> = vec![(eps, 1.0)];
        atoms.extend((1..n).map(|k| (k as f64, 1.0)));
        let mu2 = Measure::from_atoms(&atoms);
        let nu = Measure::lebesgue(-0.5, n as f64 - 0.5);
        let shift = eps / n as f64;
        let nu2 = Measure::lebesgue(-0.5 + shift, n as f64 - 0.5 + shift);
        let w_ok = (mu.wasserstein(&mu2).unwrap() - eps).abs() <= 1e-12
            && (nu.wasserstein(&nu2).unwrap() - eps).abs() <= 1e-12;
        let pi = curtain_atomic(&mu, &nu).unwrap();
        let pi2 = curtain_atomic(&mu2, &nu2).unwrap();
        let lb = support_distance_lb(&pi, &pi2);
        let harmonic: f64 = (2..=n).map(|k| 0.5 / k as f64).sum();
        let lb_ok = lb / eps >= harmonic - 1e-6;
        all &= report(
            &format!("wass-plouf n={n}"),
            w_ok && lb_ok,
            format!("lb/eps = {:.4} >= {harmonic:.4}", lb / eps),
        );
    }
    all
}

fn uniform_poisson() -> bool {
    let mut all = true;
    let mesh = 2f64.powi(-12);
    let kernel_ok = {
        let k = uniform_exp_kernel(0.3, 0.3 + mesh);
        (k.p_down - 0.5 * (1.0 - (-2.0 * mesh).exp())).abs() <= 1e-12
    };
    all &= report("uniform-poisson kernel", kernel_ok, "p_down = (1 - e^{-2h})/2".into());

    let p = Peacock::UniformExp;
    let part = Partition::uniform((0.0, 1.0), mesh).unwrap();
    let ps = sample_paths(&p, &part, 10_000, 8_888).unwrap();
    let stats = jump_statistics(&p, &ps).unwrap();
    let jumps_ok = stats.mean_jumps >= 0.94 && stats.mean_jumps <= 1.06;
    all &= report(
        "uniform-poisson jump count",
        jumps_ok,
        format!("mean jumps {:.4} in [0.94, 1.06]", stats.mean_jumps),
    );

    let euler_bound = 44.0 * mesh;
    let times = part.times();
    let mut worst: f64 = 0.0;
    for row in ps.values.iter().take(500) {
        let mut flow_c = 0.5 - row[0];
        for k in 0..times.len() - 1 {
            let kernel = uniform_exp_kernel(times[k], times[k + 1]);
            let continuation = kernel.up(row[k]);
            if (row[k + 1] - continuation).abs() > 1e-9 * (1.0 + continuation.abs()) {
                flow_c = (0.5 * (2.0 * times[k + 1]).exp() - row[k + 1])
                    * (-times[k + 1]).exp();
            } else {
                let t = times[k + 1];
                let flow = 0.5 * (2.0 * t).exp() - flow_c * t.exp();
                worst = worst.max((row[k + 1] - flow).abs());
            }
        }
    }
    all &= report(
        "uniform-poisson inter-jump flow",
        worst <= euler_bound,
        format!("max deviation {worst:.2e} <= {euler_bound:.2e}"),
    );
    all
}

fn threepoint() -> bool {
    let mut all = true;
    let p = Peacock::ThreePoint;
    let h = 1e-3;
    let col_map = [0usize, 2, 1];
    let permutation = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
    let mixing = [[1.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.0, 0.5, 0.5]];

    let (_, one) = transition(&p, 1.0 - h, 1.0 + h).unwrap();
    let one = one.unwrap();
    let mut dev: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            dev = dev.max((one.rows[i][col_map[j]] - permutation[i][j]).abs());
        }
    }
    all &= report("threepoint one-step permutation", dev <= 5e-3, format!("max dev {dev:.1e}"));

    let part = Partition::from_times(vec![1.0 - h, 1.0, 1.0 + h]).unwrap();
    let two = chain_compose(&p, &part).unwrap();
    let mut dev: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            dev = dev.max((two.rows[i][col_map[j]] - mixing[i][j]).abs());
        }
    }
    all &= report("threepoint two-step mixing", dev <= 5e-3, format!("max dev {dev:.1e}"));

    let at = curtain_core::peacock::markov_defect(&p, 1.0, h).unwrap();
    let off = curtain_core::peacock::markov_defect(&p, 0.7, h).unwrap();
    all &= report(
        "threepoint markov defect",
        at >= 0.8 && off <= 0.05,
        format!("defect(1.0) = {at:.3}, defect(0.7) = {off:.1e}"),
    );
    all
}

fn stocking() -> bool {
    let p = Peacock::stocking(64);
    let part = Partition::uniform((0.0, 1.0), 2f64.powi(-10)).unwrap();
    let ps = sample_paths(&p, &part, 1000, 11_111).unwrap();
    let mut violations = 0usize;
    let mut settled = 0usize;
    for row in &ps.values {
        let mut sv: Option<f64> = None;
        for &v in row {
            match sv {
                None if v <= -0.5 => {
                    sv = Some(v);
                    settled += 1;
                }
                Some(s) if v != s => violations += 1,
                _ => {}
            }
        }
    }
    report(
        "stocking absorption",
        violations == 0,
        format!("{settled}/1000 settled, {violations} movements after absorption"),
    )
}

fn lips_suite() -> bool {
    let mut rng = CounterRng::new(1003);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let n = 1 + (rng.next_u64() % 5) as usize;
        let w = rng.uniform(0.1, 0.5);
        let equal_atoms = |rng: &mut CounterRng| {
            let atoms: Vec<(f64, f64)> =
                (0..n).map(|_| (rng.uniform(-1.2, 1.2), w)).collect();
            Measure::from_atoms(&atoms)
        };
        let mu = equal_atoms(&mut rng);
        let mu2 = equal_atoms(&mut rng);
        let extra = rng.uniform(0.2, 0.8);
        let make_target = |rng: &mut CounterRng| {
            let d1 = dilate(rng, &mu);
            let d2 = dilate(rng, &mu2);
            pad_left(&Measure::combine(&[(1.0, &d1), (1.0, &d2)]), Some(-30.0), extra)
        };
        let nu = make_target(&mut rng);
        let nu2 = make_target(&mut rng);
        let (s1, _) = shadow_atomic(&mu, &nu).unwrap();
        let (s2, _) = shadow_atomic(&mu2, &nu2).unwrap();
        let lhs = s1.wasserstein(&s2).unwrap();
        let bound = mu.wasserstein(&mu2).unwrap() + 2.0 * nu.wasserstein(&nu2).unwrap();
        worst = worst.max(lhs - bound);
        if lhs > bound + 1e-8 {
            return report("lips-suite", false, format!("violation {lhs} > {bound}"));
        }
    }
    report("lips-suite", true, format!("1000 quadruples, max lhs - bound = {worst:.2e}"))
}

fn dilate(rng: &mut CounterRng, mu: &Measure) -> Measure {
    let mut terms: Vec<Measure> = Vec::new();
    for (x, w) in mu.atoms().expect("atomic source") {
        let r = rng.uniform(0.05, 1.0);
        terms.push(Measure::uniform(x - r, x + r, w));
    }
    let refs: Vec<(f64, &Measure)> = terms.iter().map(|m| (1.0, m)).collect();
    Measure::combine(&refs)
}
