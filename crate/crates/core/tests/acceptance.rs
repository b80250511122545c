//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p tpp --test acceptance` runs everything; trailing numbers
//! (`-- 1 4`) select criteria. Criteria that reuse results of others
//! compute them silently when those are not selected.

mod support;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, DiscreteCDF};
use support::{min_cost_flow_purchase, random_instance, random_subset};
use tpp::env::EnvState;
use tpp::eval::solve_with_augmentation;
use tpp::heuristics::{cah, gsh, post_optimize, trh, tsp_resequence, Pipeline};
use tpp::instance::{generate_set, import_tpplib_with, GeneratorSpec, ImportOptions};
use tpp::nn::gradcheck::{check_params, random_tensor, GradReport};
use tpp::nn::{BatchNorm, Checkpoint, Linear, LstmCell, Mlp, Mode, MultiHeadAttention, ParamStore, Tape, Tensor, Window, Windows};
use tpp::oracle::brute_force_solve;
use tpp::policy::{Batch, Decode, Policy, PolicyConfig};
use tpp::purchase::optimal_purchase;
use tpp::training::{fine_tune, greedy_objectives, meta_train, train, Distribution, MetaConfig, TrainConfig, Trainer};
use tpp::{Rounding, Solution, TppInstance};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0);
    for x in xs {
        s += x;
        n += 1;
    }
    s / n as f64
}

fn mean_obj(sols: &[Solution]) -> f64 {
    mean(sols.iter().map(|s| s.objective as f64))
}

/// Solutions of one strategy before and after each post-optimization stage.
struct PostOptSet {
    label: String,
    before: Vec<Solution>,
    after_trh: Vec<Solution>,
    after_reseq: Vec<Solution>,
    insts: Vec<TppInstance>,
}

impl PostOptSet {
    fn new(label: &str, insts: &[TppInstance], before: Vec<Solution>) -> Self {
        let after_trh: Vec<Solution> = insts.iter().zip(&before).map(|(i, s)| trh(i, s).unwrap()).collect();
        let after_reseq = insts
            .iter()
            .zip(&after_trh)
            .map(|(i, s)| Solution::new(i, tsp_resequence(i, &s.route).unwrap(), s.plan.clone()).unwrap())
            .collect();
        Self { label: label.to_owned(), before, after_trh, after_reseq, insts: insts.to_vec() }
    }
}

struct DeskModel {
    policy: Policy,
    store: ParamStore,
    test: Vec<TppInstance>,
    optimum: Vec<i64>,
    init_mean: f64,
    greedy: Vec<i64>,
    instances_used: usize,
}

#[derive(Default)]
struct Context {
    post_opt: Vec<PostOptSet>,
    desk: Option<DeskModel>,
    meta_done: bool,
}

fn main() -> ExitCode {
    let selected: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let all = selected.is_empty();
    let mut cx = Context::default();
    let criteria: [(u32, &str, Option<Duration>, fn(&mut Context) -> Verdict); 10] = [
        (1, "purchase planner equals min-cost-flow oracle", Some(Duration::from_secs(60)), c1),
        (2, "10,000 masked rollouts are feasible", Some(Duration::from_secs(300)), c2),
        (3, "brute force is a lower bound and is attained", None, c3),
        (4, "gradients match finite differences", Some(Duration::from_secs(300)), c4),
        (5, "heuristic means within 10% of reference levels", Some(Duration::from_secs(1800)), c5),
        (6, "TPPLIB EEuclideo.50.50 heuristic gaps", None, c6),
        (7, "desk-scale learning on U-TPP (15,10)", Some(Duration::from_secs(7200)), c7),
        (8, "meta-initialization beats scratch after 2 fine-tuning steps", None, c8),
        (9, "one checkpoint runs on (10,5), (20,10), (40,20)", None, c9),
        (10, "post-optimization never hurts", None, c10),
    ];
    let mut failed = 0;
    for (n, name, limit, run) in criteria {
        if !all && !selected.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let v = run(&mut cx);
        let took = t0.elapsed();
        let late = limit.is_some_and(|l| took > l);
        let pass = v.pass && !late;
        let status = if v.detail.starts_with("SKIP") {
            "SKIP"
        } else if pass {
            "PASS"
        } else {
            failed += 1;
            "FAIL"
        };
        let timing = match limit {
            Some(l) => format!("{:.1}s, limit {}s", took.as_secs_f64(), l.as_secs()),
            None => format!("{:.1}s", took.as_secs_f64()),
        };
        println!("{status} criterion {n}: {name}: {} [{timing}]", v.detail);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn c1(_: &mut Context) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut mismatches, mut infeasible) = (0, 0);
    for _ in 0..1000 {
        let inst = random_instance(&mut rng, 1..=10, 1..=8);
        let visited = random_subset(&mut rng, &inst);
        let oracle = min_cost_flow_purchase(&inst, &visited);
        let planner = optimal_purchase(&inst, &visited).ok().map(|(_, c)| c);
        infeasible += usize::from(oracle.is_none());
        mismatches += usize::from(planner != oracle);
    }
    verdict(mismatches == 0, format!("{mismatches} mismatches in 1000 ({infeasible} infeasible subsets agreed)"))
}

fn random_rollout<R: Rng>(inst: &TppInstance, rng: &mut R) -> tpp::Result<Solution> {
    let mut env = EnvState::initial(inst);
    while !env.is_terminal() {
        let allowed: Vec<usize> = env.action_mask()?.allowed().collect();
        env.apply(allowed[rng.random_range(0..allowed.len())])?;
    }
    Ok(env.terminal_reward()?.1)
}

fn c2(_: &mut Context) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..10_000 {
        let inst = random_instance(&mut rng, 1..=40, 1..=25);
        match random_rollout(&inst, &mut rng) {
            Ok(sol) if sol.check(&inst).is_ok() => {}
            _ => bad += 1,
        }
    }
    verdict(bad == 0, format!("{bad} infeasible of 10000"))
}

fn c3(_: &mut Context) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut store = ParamStore::new();
    let policy = Policy::new(PolicyConfig { dim: 16, layers: 2, heads: 4, ff_hidden: 32, ..PolicyConfig::default() }, &mut store, &mut rng).unwrap();
    let (mut violations, mut attained, mut compared) = (0, 0, 0);
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 1..=8, 1..=6);
        let opt = brute_force_solve(&inst).unwrap().objective;
        let mut objectives: Vec<i64> = Pipeline::ALL.iter().map(|p| p.solve(&inst).unwrap().objective).collect();
        objectives.extend((0..20).map(|_| random_rollout(&inst, &mut rng).unwrap().objective));
        objectives.push(policy.greedy(&store, &inst).unwrap().objective);
        let sampled = policy.solve_batch(&store, &vec![&inst; 8], Decode::Sample, &mut rng).unwrap();
        objectives.extend(sampled.iter().map(|(s, _)| s.objective));
        compared += objectives.len();
        violations += objectives.iter().filter(|&&o| o < opt).count();
        attained += usize::from(objectives.contains(&opt));
    }
    verdict(
        violations == 0 && attained >= 1,
        format!("{violations} objectives below the optimum in {compared}; optimum attained on {attained}/50 instances"),
    )
}

fn windows_for(rng: &mut ChaCha8Rng, queries: usize, keys: usize, masked: bool) -> Windows {
    let ws: Vec<Window> = (0..queries)
        .map(|_| {
            let start = rng.random_range(0..keys);
            Window { start, len: rng.random_range(1..=keys - start) }
        })
        .collect();
    let slots: usize = ws.iter().map(|w| w.len).sum();
    let mask = masked.then(|| (0..slots).map(|_| rng.random_bool(0.75)).collect());
    Windows::new(ws, mask)
}

fn c4(_: &mut Context) -> Verdict {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let (mut checks, mut entries, mut kinks) = (0, 0, 0);
    let mut note = |what: String, r: GradReport| {
        checks += 1;
        entries += r.checked;
        kinks += r.kinks;
        if r.max_rel_error > worst || worst_at.is_empty() {
            worst = worst.max(r.max_rel_error);
            worst_at = what;
        }
    };
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let rows = rng.random_range(2..7);
        let heads = rng.random_range(1..4);
        let dim = heads * rng.random_range(1..4);
        let input = rng.random_range(1..6);
        let coef: Vec<f64> = (0..rows * 16 * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = random_tensor(&mut rng, rows, input);
        let xd = random_tensor(&mut rng, rows, dim);
        let weighted = move |t: &mut Tape, v: tpp::nn::Var| {
            let n = t.value(v).len();
            let y = t.tanh(v);
            t.weighted_sum(y, std::rc::Rc::new(coef[..n].to_vec()))
        };

        let mut s = ParamStore::new();
        let lin = Linear::new(&mut s, "lin", input, dim, true, &mut rng).unwrap();
        let mlp = Mlp::new(&mut s, "mlp", [dim, 2 * dim + 1, dim], &mut rng).unwrap();
        let r = check_params(&mut s, 1e-5, |s, t| {
            let x = t.constant(x.clone());
            let y = lin.forward(t, s, x).unwrap();
            let y = mlp.forward(t, s, y).unwrap();
            weighted(t, y)
        });
        note(format!("linear+mlp seed {seed}"), r);

        for mode in [Mode::Train, Mode::Infer] {
            let mut s = ParamStore::new();
            let lin = Linear::new(&mut s, "lin", input, dim, true, &mut rng).unwrap();
            let bn = BatchNorm::new(&mut s, "bn", dim).unwrap();
            s.set_buffer("bn.running_mean", Tensor::new(&[dim], random_tensor(&mut rng, 1, dim).into_data()).unwrap());
            s.set_buffer("bn.running_var", Tensor::filled(&[dim], rng.random_range(0.5..2.0)));
            let r = check_params(&mut s, 1e-5, |s, t| {
                let x = t.constant(x.clone());
                let y = lin.forward(t, s, x).unwrap();
                let y = bn.forward(t, s, y, mode).unwrap();
                weighted(t, y)
            });
            note(format!("batch norm {mode:?} seed {seed}"), r);
        }

        let mut s = ParamStore::new();
        let mha = MultiHeadAttention::new(&mut s, "mha", dim, dim, heads, &mut rng).unwrap();
        let w = std::rc::Rc::new(windows_for(&mut rng, rows, rows, seed % 2 == 1));
        let r = check_params(&mut s, 1e-5, |s, t| {
            let h = t.constant(xd.clone());
            let y = mha.forward(t, s, h, h, w.clone()).unwrap();
            weighted(t, y)
        });
        note(format!("attention seed {seed}"), r);

        let mut s = ParamStore::new();
        let cell = LstmCell::new(&mut s, "lstm", dim, dim, &mut rng).unwrap();
        let r = check_params(&mut s, 1e-5, |s, t| {
            let (mut h, mut c) = (t.constant(Tensor::zeros(&[rows, dim])), t.constant(Tensor::zeros(&[rows, dim])));
            let x = t.constant(xd.clone());
            for _ in 0..3 {
                (h, c) = cell.forward(t, s, x, h, c).unwrap();
            }
            weighted(t, h)
        });
        note(format!("lstm seed {seed}"), r);

        let config = PolicyConfig { dim: 2 * heads, layers: 1 + (seed as usize % 2), heads, ff_hidden: 4 * heads, ..PolicyConfig::default() };
        let mut s = ParamStore::new();
        let p = Policy::new(config, &mut s, &mut rng).unwrap();
        let insts: Vec<TppInstance> = (0..2).map(|_| random_instance(&mut rng, 2..=4, 1..=3)).collect();
        let refs: Vec<&TppInstance> = insts.iter().collect();
        let batch = Batch::new(&refs).unwrap();
        let mut tape = Tape::new();
        let r = p.rollout(&mut tape, &s, &batch, Decode::Sample, Mode::Train, &mut rng).unwrap();
        let actions = r.actions.clone();
        let weights = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let r = check_params(&mut s, 1e-5, |s, t| {
            let r = p.rollout(t, s, &batch, Decode::Forced(&actions), Mode::Train, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            r.weighted_log_prob(t, &weights).unwrap()
        });
        note(format!("policy log-probability seed {seed}"), r);
    }
    // a check that skipped most entries would prove little
    let skipped = kinks as f64 / (entries + kinks) as f64;
    verdict(
        worst <= 1e-4 && skipped <= 0.01,
        format!("{checks} checks over {entries} entries, worst relative error {worst:.2e} ({worst_at}); {kinks} entries straddling a ReLU kink skipped"),
    )
}

fn c5(cx: &mut Context) -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    let cases = [
        ("U-TPP (50,50)", GeneratorSpec::unrestricted(50, 50, 5), 2221.0, 1910.0),
        ("R-TPP (50,50,0.99)", GeneratorSpec::restricted(50, 50, 0.99, 5), 2152.0, 2257.0),
    ];
    for (label, spec, gsh_ref, cah_ref) in cases {
        let insts = generate_set(&spec, 1000).unwrap();
        let g: Vec<Solution> = insts.iter().map(|i| gsh(i).unwrap()).collect();
        let c: Vec<Solution> = insts.iter().map(|i| cah(i).unwrap()).collect();
        let gs = PostOptSet::new(&format!("GSH on {label}"), &insts, g);
        let cs = PostOptSet::new(&format!("CAH on {label}"), &insts, c);
        let (gm, cm) = (mean_obj(&gs.after_reseq), mean_obj(&cs.after_reseq));
        let ok = (gm / gsh_ref - 1.0).abs() <= 0.10 && (cm / cah_ref - 1.0).abs() <= 0.10;
        pass &= ok;
        lines.push(format!(
            "{label}: GSH+TRH {gm:.0} vs {gsh_ref} ({:+.1}%), CAH+TRH {cm:.0} vs {cah_ref} ({:+.1}%){}",
            100.0 * (gm / gsh_ref - 1.0),
            100.0 * (cm / cah_ref - 1.0),
            if ok { "" } else { " out of tolerance" }
        ));
        cx.post_opt.push(gs);
        cx.post_opt.push(cs);
    }
    verdict(pass, lines.join("; "))
}

fn c6(cx: &mut Context) -> Verdict {
    let Some(dir) = std::env::var_os("TPPLIB_DIR").map(PathBuf::from) else {
        return verdict(true, "SKIP: set TPPLIB_DIR to a directory holding the EEuclideo.50.50.* files");
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map(|d| d.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    files.retain(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("EEuclideo.50.50.")));
    files.sort();
    if files.is_empty() {
        return verdict(true, format!("SKIP: no EEuclideo.50.50.* files in {}", dir.display()));
    }
    let insts: Vec<TppInstance> = files
        .iter()
        .map(|f| {
            let r = std::io::BufReader::new(std::fs::File::open(f).unwrap());
            import_tpplib_with(r, ImportOptions { rounding: Rounding::Nearest }).unwrap().0
        })
        .collect();
    let g: Vec<Solution> = insts.iter().map(|i| gsh(i).unwrap()).collect();
    let c: Vec<Solution> = insts.iter().map(|i| cah(i).unwrap()).collect();
    let gs = PostOptSet::new("GSH on TPPLIB", &insts, g);
    let cs = PostOptSet::new("CAH on TPPLIB", &insts, c);
    let gap = |s: &PostOptSet| mean_obj(&s.after_reseq) / 1482.0 - 1.0;
    let (gg, cg) = (gap(&gs), gap(&cs));
    cx.post_opt.push(gs);
    cx.post_opt.push(cs);
    verdict(gg <= 0.30 && cg <= 0.20, format!("{} files: GSH+TRH gap {:.2}% (≤ 30), CAH+TRH gap {:.2}% (≤ 20)", insts.len(), 100.0 * gg, 100.0 * cg))
}

/// Desk budget: 12 epochs of 60 batches of 64, plus a 256-instance
/// baseline test set per epoch, 49,152 instances in all.
fn desk_config() -> TrainConfig {
    TrainConfig {
        epochs: 12,
        batch_size: 64,
        steps_per_epoch: 60,
        lr: 1e-3,
        eval_size: 256,
        dist: Distribution::unrestricted(15, 10),
        seed: 7,
        policy: PolicyConfig::with_dim(32),
        ..TrainConfig::default()
    }
}

fn desk_model(cx: &mut Context) -> &DeskModel {
    if cx.desk.is_none() {
        let config = desk_config();
        let test = generate_set(&GeneratorSpec::unrestricted(15, 10, 777_777), 200).unwrap();
        let optimum: Vec<i64> = test.iter().map(|i| brute_force_solve(i).unwrap().objective).collect();
        let mut trainer = Trainer::new(config.policy.clone(), config.lr, config.seed).unwrap();
        let init = greedy_objectives(&trainer.policy, &trainer.store, &test).unwrap();
        train(&config, &mut trainer, |_| {}).unwrap();
        let greedy = greedy_objectives(&trainer.policy, &trainer.store, &test).unwrap();
        let instances_used = config.epochs * (config.steps_per_epoch * config.batch_size + config.eval_size);
        cx.desk = Some(DeskModel {
            policy: trainer.policy,
            store: trainer.store,
            test,
            optimum,
            init_mean: mean(init.iter().map(|&o| o as f64)),
            greedy,
            instances_used,
        });
    }
    cx.desk.as_ref().unwrap()
}

fn c7(cx: &mut Context) -> Verdict {
    let d = desk_model(cx);
    let gap = mean(d.greedy.iter().zip(&d.optimum).map(|(&g, &o)| (g - o) as f64 / o as f64));
    let trained = mean(d.greedy.iter().map(|&o| o as f64));
    let improvement = 1.0 - trained / d.init_mean;
    let ok = gap <= 0.10 && improvement >= 0.30 && d.instances_used <= 50_000;
    verdict(
        ok,
        format!(
            "{} instances; greedy gap {:.1}% (≤ 10), mean {:.0} vs init {:.0} ({:.1}% better, ≥ 30)",
            d.instances_used,
            100.0 * gap,
            trained,
            d.init_mean,
            100.0 * improvement
        ),
    )
}

fn c8(cx: &mut Context) -> Verdict {
    let policy_config = PolicyConfig::with_dim(32);
    let meta = MetaConfig {
        distributions: vec![Distribution::unrestricted(10, 5), Distribution::unrestricted(15, 10)],
        epochs: 4,
        outer_steps: 50,
        inner_steps: 2,
        beta: 0.8,
        batch_size: 32,
        lr: 1e-3,
        eval_size: 128,
        seed: 8,
        policy: policy_config.clone(),
        ..MetaConfig::default()
    };
    let mut trainer = Trainer::new(policy_config.clone(), meta.lr, meta.seed).unwrap();
    meta_train(&meta, &mut trainer, |_| {}).unwrap();
    let unseen = Distribution::unrestricted(20, 10);
    let eval = generate_set(&GeneratorSpec::unrestricted(20, 10, 888_888), 100).unwrap();
    let (mut wins, mut deltas) = (0u64, Vec::new());
    for seed in 0..20u64 {
        let meta_tuned = fine_tune(&trainer.policy, &trainer.store, &unseen, 2, 64, meta.lr, 1000 + seed).unwrap();
        let mut scratch = ParamStore::new();
        let scratch_policy = Policy::new(policy_config.clone(), &mut scratch, &mut ChaCha8Rng::seed_from_u64(2000 + seed)).unwrap();
        let scratch_tuned = fine_tune(&scratch_policy, &scratch, &unseen, 2, 64, meta.lr, 1000 + seed).unwrap();
        let a = mean(greedy_objectives(&trainer.policy, &meta_tuned, &eval).unwrap().iter().map(|&o| o as f64));
        let b = mean(greedy_objectives(&scratch_policy, &scratch_tuned, &eval).unwrap().iter().map(|&o| o as f64));
        wins += u64::from(a < b);
        deltas.push(b - a);
        if seed == 0 {
            let sols: Vec<Solution> = eval.iter().map(|i| solve_with_augmentation(&trainer.policy, &meta_tuned, i).unwrap()).collect();
            cx.post_opt.push(PostOptSet::new("meta-tuned RL on (20,10)", &eval, sols));
        }
    }
    cx.meta_done = true;
    // one-sided sign test against a fair coin
    let p = 1.0 - Binomial::new(0.5, 20).unwrap().cdf(wins.saturating_sub(1));
    verdict(
        wins >= 14 && p < 0.05,
        format!("meta wins {wins}/20 (≥ 14), sign test p = {p:.2e} (< 0.05), mean advantage {:.0}", mean(deltas)),
    )
}

fn c9(cx: &mut Context) -> Verdict {
    let d = desk_model(cx);
    let path = std::env::temp_dir().join(format!("tpp-acceptance-{}.json", std::process::id()));
    Checkpoint::capture(&d.store, d.policy.model_card(&d.store), serde_json::json!({})).save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    let _ = std::fs::remove_file(&path);
    let (policy, store) = Policy::from_checkpoint(&loaded).unwrap();
    let scalars = store.num_scalars();
    let mut failures = Vec::new();
    for (m, k) in [(10, 5), (20, 10), (40, 20)] {
        for inst in generate_set(&GeneratorSpec::unrestricted(m, k, 9), 5).unwrap() {
            let run = policy.greedy(&store, &inst).and_then(|s| s.check(&inst)).and_then(|_| solve_with_augmentation(&policy, &store, &inst)).and_then(|s| s.check(&inst));
            if let Err(e) = run {
                failures.push(format!("({m},{k}): {e}"));
            }
        }
    }
    let unchanged = store.num_scalars() == scalars && store.max_abs_diff(&d.store).unwrap() == 0.0;
    verdict(
        failures.is_empty() && unchanged,
        if failures.is_empty() { format!("15 instances solved with {scalars} parameters, none reshaped") } else { failures.join("; ") },
    )
}

fn c10(cx: &mut Context) -> Verdict {
    if cx.post_opt.is_empty() {
        c5(cx);
    }
    if !cx.meta_done {
        c8(cx);
    }
    let d = desk_model(cx);
    let e2e: Vec<Solution> = d.test.iter().map(|i| solve_with_augmentation(&d.policy, &d.store, i).unwrap()).collect();
    let desk_set = PostOptSet::new("desk RL on (15,10)", &d.test.clone(), e2e);
    cx.post_opt.push(desk_set);
    let mut increases = 0;
    let mut notes = Vec::new();
    let mut means_ok = true;
    for s in &cx.post_opt {
        for j in 0..s.before.len() {
            increases += usize::from(s.after_trh[j].objective > s.before[j].objective);
            increases += usize::from(s.after_reseq[j].objective > s.after_trh[j].objective);
            let direct = post_optimize(&s.insts[j], &s.before[j]).unwrap();
            increases += usize::from(direct.objective != s.after_reseq[j].objective);
        }
        let (b, a) = (mean_obj(&s.before), mean_obj(&s.after_reseq));
        means_ok &= a <= b;
        notes.push(format!("{} {b:.0} -> {a:.0}", s.label));
    }
    verdict(increases == 0 && means_ok, format!("{increases} individual increases; {}", notes.join(", ")))
}
