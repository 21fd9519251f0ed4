use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lna_forge::explorer::run_sweep_with;
use lna_forge::parallel::Execution;
use lna_forge::synth::{SynthOptions, Synthesizer};
use lna_forge::{SweepKind, SweepPlan, TechnologyCard};

fn sweep(c: &mut Criterion) {
    let tech = TechnologyCard::default_130nm();
    let synth = Synthesizer::new(&tech, SynthOptions::default()).expect("default card synthesizes");
    let mut gainxw = SweepPlan::new(SweepKind::GainxW);
    gainxw.ids = vec![0.3e-3, 0.5e-3, 0.7e-3];
    let plans = [
        ("wxid", SweepPlan::new(SweepKind::WxId)),
        ("gainxw", gainxw),
    ];

    let mut group = c.benchmark_group("sweep");
    for (name, plan) in &plans {
        for (label, exec) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel { threads: 0 }),
        ] {
            group.bench_with_input(BenchmarkId::new(label, name), plan, |b, plan| {
                b.iter(|| run_sweep_with(plan, &synth, exec).expect("sweep runs"))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
