use std::io::Write;
use std::time::Instant;
use femtonet::analytic_cluster::*;
use femtonet::analytic_ppp::InterferenceContext;
use femtonet::config::default_cluster_config;

fn main() {
    let ctx = InterferenceContext::new(default_cluster_config());
    let cache = ClusterKernelCache::new(&ctx).unwrap();
    let t: f64 = 5.124e52;
    let w2 = ctx.cfg.w * ctx.cfg.w;
    // r-nodes that a GK21 rule on [0, 2.89e-11] would visit
    for frac in [0.0022, 0.013, 0.035, 0.07, 0.5, 0.9, 0.99, 0.9978] {
        let r = 2.886648343708961e-11 * frac;
        let s = t * r.powf(4.0) * w2;
        let t0 = Instant::now();
        eprint!("r={r:.3e} s={s:.3e} ");
        std::io::stderr().flush().unwrap();
        let k = cache.cluster_outer_smooth(s);
        eprint!("k_out {:?} {:?} ", k.as_ref().map(|v| v.round()), t0.elapsed());
        std::io::stderr().flush().unwrap();
        let t1 = Instant::now();
        let p = cache.palm_disk(s, r);
        eprintln!("palm {:?} {:?}", p.as_ref().map(|v| v.round()), t1.elapsed());
    }
}
