use std::time::Instant;

use entroplex::lpbuild::LpContext;
use entroplex::model::{DemandFilter, ProblemInstance};
use entroplex::ratsolve::{rat_int, SolverOptions, Status};

#[test]
#[ignore]
fn probe_sizes() {
    let t0 = Instant::now();
    let inst = ProblemInstance::new(3, 2, DemandFilter::All, None).unwrap();
    let ctx = LpContext::new(&inst).unwrap();
    println!(
        "(3,2): terms={} constraints={} build={:?}",
        ctx.terms.len(),
        ctx.constraints.len(),
        t0.elapsed()
    );
    let t1 = Instant::now();
    let opts = SolverOptions::default();
    let res = ctx
        .solve(&ctx.objective_mr(rat_int(1), rat_int(1)), &[], &opts)
        .unwrap();
    println!(
        "(3,2) M+R: status={:?} obj={} pivots={} solve={:?}",
        res.status,
        res.objective,
        res.pivots,
        t1.elapsed()
    );
    assert_eq!(res.status, Status::Optimal);

    for (n, k) in [(4usize, 2usize)] {
        let t2 = Instant::now();
        let inst = ProblemInstance::with_cap(n, k, DemandFilter::All, None, 24).unwrap();
        let ctx = LpContext::new(&inst).unwrap();
        println!(
            "({},{}): terms={} constraints={} build={:?}",
            n,
            k,
            ctx.terms.len(),
            ctx.constraints.len(),
            t2.elapsed()
        );
        let t3 = Instant::now();
        let res = ctx
            .solve(&ctx.objective_mr(rat_int(1), rat_int(1)), &[], &opts)
            .unwrap();
        println!(
            "({},{}) M+R: status={:?} obj={} solve={:?}",
            n,
            k,
            res.status,
            res.objective,
            t3.elapsed()
        );
    }
}
