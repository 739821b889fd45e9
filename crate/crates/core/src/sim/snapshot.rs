//! One network snapshot: point sets, per-cell loads, randomized channel
//! assignment, and the tagged-UE SINR probe.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::geometry::{dist2, poisson_count, sample_cluster, sample_ppp, uniform_in_disk, Point};
use super::{SimSpec, Tier};
use crate::config::{Deployment, NetworkConfig};

/// Full channel mask for M subchannels.
fn all_channels(m: u32) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

/// Choose `k` distinct set bits of `mask`, uniformly at random.
fn choose_bits<R: Rng>(mask: u64, k: u32, rng: &mut R) -> u64 {
    let n = mask.count_ones();
    let k = k.min(n);
    if k == 0 {
        return 0;
    }
    if k == n {
        return mask;
    }
    let mut bits = [0u8; 64];
    let mut len = 0usize;
    let mut m = mask;
    while m != 0 {
        bits[len] = m.trailing_zeros() as u8;
        len += 1;
        m &= m - 1;
    }
    let mut chosen = 0u64;
    for i in 0..k as usize {
        let j = rng.random_range(i..len);
        bits.swap(i, j);
        chosen |= 1u64 << bits[i];
    }
    chosen
}

/// One realization of the two-tier network under the two-scale view:
/// FAP interiors are points carrying their load counts.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub mbs: Vec<Point>,
    /// Outside nonsubscribers associated to each MBS by nearest-MBS rule.
    pub mbs_load: Vec<u32>,
    /// Channels each MBS occupies: min(U_out, M) chosen uniformly.
    pub mbs_occupied: Vec<u64>,
    pub faps: Vec<Point>,
    pub fap_load_s: Vec<u32>,
    pub fap_load_in: Vec<u32>,
    /// The M_s shared channels each FAP selected.
    pub fap_shared: Vec<u64>,
    /// min(U_s, M_r) reserved plus min(U_in, M_s) shared channels.
    pub fap_occupied: Vec<u64>,
    /// Index of the FAP added at the window center for femto probing.
    pub tagged_fap: Option<usize>,
}

/// Sample a complete snapshot.
///
/// For femto probing the serving FAP is an extra point placed at the
/// window center; under a clustered deployment its cluster is completed
/// with a parent uniform in the disk around it and Poisson-many
/// siblings, realizing the Palm distribution of the process.
pub fn build_snapshot<R: Rng>(cfg: &NetworkConfig, spec: &SimSpec, rng: &mut R) -> Snapshot {
    let hw = spec.window_half_width;
    let sample_hw = match spec.boundary {
        super::geometry::Boundary::Torus => hw,
        super::geometry::Boundary::GuardZone { margin } => hw + margin,
    };

    let mbs = sample_ppp(cfg.lambda_m, sample_hw, rng);

    let mut faps = match cfg.deployment {
        Deployment::PoissonFaps => sample_ppp(cfg.lambda_f, sample_hw, rng),
        Deployment::ClusteredFaps {
            lambda_p,
            lambda_c,
            r_c,
        } => sample_cluster(lambda_p, lambda_c, r_c, sample_hw, spec.boundary, rng),
    };

    let tagged_fap = if spec.tagged_tier == Tier::Femto {
        let idx = faps.len();
        faps.push(Point::ORIGIN);
        if let Deployment::ClusteredFaps {
            lambda_c, r_c, ..
        } = cfg.deployment
        {
            // Complete the tagged point's cluster: parent uniform in the
            // disk around it, siblings Poisson in the parent's disk.
            let parent = uniform_in_disk(r_c, rng);
            let n = poisson_count(std::f64::consts::PI * r_c * r_c * lambda_c, rng);
            for _ in 0..n {
                let offset = uniform_in_disk(r_c, rng);
                faps.push(Point {
                    x: parent.x + offset.x,
                    y: parent.y + offset.y,
                });
            }
        }
        Some(idx)
    } else {
        None
    };

    // Per-FAP loads and channel selections, in index order.
    let m = cfg.m;
    let m_s = cfg.m_s;
    let m_r = cfg.m_r();
    let all = all_channels(m);
    let mean_us = cfg.mean_us();
    let mean_uin = cfg.mean_uin();
    let mut fap_load_s = Vec::with_capacity(faps.len());
    let mut fap_load_in = Vec::with_capacity(faps.len());
    let mut fap_shared = Vec::with_capacity(faps.len());
    let mut fap_occupied = Vec::with_capacity(faps.len());
    for _ in 0..faps.len() {
        let us = poisson_count(mean_us, rng) as u32;
        let uin = poisson_count(mean_uin, rng) as u32;
        let shared = choose_bits(all, m_s, rng);
        let reserved = all & !shared;
        let occupied = choose_bits(reserved, us.min(m_r), rng)
            | choose_bits(shared, uin.min(m_s), rng);
        fap_load_s.push(us);
        fap_load_in.push(uin);
        fap_shared.push(shared);
        fap_occupied.push(occupied);
    }

    // Outside nonsubscribers, associated to the nearest MBS.
    let mut mbs_load = vec![0u32; mbs.len()];
    if !mbs.is_empty() {
        for ue in sample_ppp(cfg.lambda_out, sample_hw, rng) {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, b) in mbs.iter().enumerate() {
                let d = dist2(ue, *b, spec.boundary, sample_hw);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            mbs_load[best] += 1;
        }
    }
    let mbs_occupied = mbs_load
        .iter()
        .map(|&u| choose_bits(all, u.min(m), rng))
        .collect();

    Snapshot {
        mbs,
        mbs_load,
        mbs_occupied,
        faps,
        fap_load_s,
        fap_load_in,
        fap_shared,
        fap_occupied,
        tagged_fap,
    }
}

/// Signal and interference powers experienced by the tagged UE on its
/// serving subchannel.
#[derive(Debug, Clone, Copy)]
pub struct SinrSample {
    pub signal: f64,
    /// Aggregate macro-tier interference, W.
    pub i_m: f64,
    /// Aggregate femto-tier interference, W.
    pub i_f: f64,
    pub sinr: f64,
}

/// A drawn probe plus the serving-cell loads that set its time-sharing
/// factors.
#[derive(Debug, Clone, Copy)]
pub struct TaggedSample {
    pub sample: SinrSample,
    /// Outside nonsubscribers in the serving macrocell (macro probes).
    pub serving_uout: Option<u32>,
    /// Subscribers in the serving femtocell (femto probes).
    pub serving_us: Option<u32>,
    /// Inside nonsubscribers in the serving femtocell (femto probes).
    pub serving_uin: Option<u32>,
}

fn pick_channel<R: Rng>(occupied: u64, rng: &mut R) -> u32 {
    choose_bits(occupied, 1, rng).trailing_zeros()
}

/// Draw the tagged UE of the requested tier. Returns `None` when the
/// snapshot has no serving AP with at least one served UE of that tier;
/// the caller resamples.
pub fn tagged_sinr<R: Rng>(
    snapshot: &Snapshot,
    cfg: &NetworkConfig,
    spec: &SimSpec,
    rng: &mut R,
) -> Option<TaggedSample> {
    match spec.tagged_tier {
        Tier::Macro => tagged_macro(snapshot, cfg, spec, rng),
        Tier::Femto => tagged_femto(snapshot, cfg, spec, rng),
    }
}

fn tagged_macro<R: Rng>(
    snapshot: &Snapshot,
    cfg: &NetworkConfig,
    spec: &SimSpec,
    rng: &mut R,
) -> Option<TaggedSample> {
    if snapshot.mbs.is_empty() {
        return None;
    }
    let hw = spec.sampling_half_width();
    let center = Point::ORIGIN;
    let mut serving = 0usize;
    let mut best = f64::INFINITY;
    for (i, b) in snapshot.mbs.iter().enumerate() {
        let d = dist2(center, *b, spec.boundary, hw);
        if d < best {
            best = d;
            serving = i;
        }
    }
    let load = snapshot.mbs_load[serving];
    if load == 0 {
        return None;
    }
    let channel = pick_channel(snapshot.mbs_occupied[serving], rng);
    let exp = Exp::new(cfg.mu).expect("positive mu");
    let h: f64 = exp.sample(rng);
    let r = best.sqrt();
    let signal = cfg.p_m * h * r.powf(-cfg.alpha);

    let mask = 1u64 << channel;
    let mut i_m = 0.0;
    for (i, b) in snapshot.mbs.iter().enumerate() {
        if i == serving || snapshot.mbs_occupied[i] & mask == 0 {
            continue;
        }
        let g: f64 = exp.sample(rng);
        let d2 = dist2(center, *b, spec.boundary, hw);
        i_m += cfg.p_m * g * d2.powf(-cfg.alpha / 2.0);
    }
    let mut i_f = 0.0;
    for (j, f) in snapshot.faps.iter().enumerate() {
        if snapshot.fap_occupied[j] & mask == 0 {
            continue;
        }
        let g: f64 = exp.sample(rng);
        let d2 = dist2(center, *f, spec.boundary, hw);
        i_f += cfg.w * cfg.p_f * g * d2.powf(-cfg.alpha / 2.0);
    }
    let denom = i_m + i_f + cfg.sigma2;
    let sinr = signal / denom;
    Some(TaggedSample {
        sample: SinrSample {
            signal,
            i_m,
            i_f,
            sinr,
        },
        serving_uout: Some(load),
        serving_us: None,
        serving_uin: None,
    })
}

fn tagged_femto<R: Rng>(
    snapshot: &Snapshot,
    cfg: &NetworkConfig,
    spec: &SimSpec,
    rng: &mut R,
) -> Option<TaggedSample> {
    let serving = snapshot.tagged_fap?;
    let us = snapshot.fap_load_s[serving];
    let uin = snapshot.fap_load_in[serving];
    if snapshot.fap_occupied[serving] == 0 {
        return None;
    }
    let channel = pick_channel(snapshot.fap_occupied[serving], rng);
    let exp = Exp::new(cfg.mu).expect("positive mu");

    // Serving distance at micro scale: UE uniform in the coverage disk.
    let r = cfg.r_f * rng.random::<f64>().sqrt();
    let h: f64 = exp.sample(rng);
    let signal = cfg.p_f * h * r.powf(-cfg.alpha);

    // Interferer distances at macro scale are measured from the serving
    // FAP's position; the full-geometry switch measures them from the
    // UE's true offset instead, quantifying the two-scale error.
    let fap_pos = snapshot.faps[serving];
    let probe = if spec.full_geometry {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        Point {
            x: fap_pos.x + r * theta.cos(),
            y: fap_pos.y + r * theta.sin(),
        }
    } else {
        fap_pos
    };

    let hw = spec.sampling_half_width();
    let mask = 1u64 << channel;
    let mut i_m = 0.0;
    for (i, b) in snapshot.mbs.iter().enumerate() {
        if snapshot.mbs_occupied[i] & mask == 0 {
            continue;
        }
        let g: f64 = exp.sample(rng);
        let d2 = dist2(probe, *b, spec.boundary, hw);
        i_m += cfg.w * cfg.p_m * g * d2.powf(-cfg.alpha / 2.0);
    }
    let mut i_f = 0.0;
    for (j, f) in snapshot.faps.iter().enumerate() {
        if j == serving || snapshot.fap_occupied[j] & mask == 0 {
            continue;
        }
        let g: f64 = exp.sample(rng);
        let d2 = dist2(probe, *f, spec.boundary, hw);
        i_f += cfg.w * cfg.w * cfg.p_f * g * d2.powf(-cfg.alpha / 2.0);
    }
    let denom = i_m + i_f + cfg.sigma2;
    let sinr = signal / denom;
    Some(TaggedSample {
        sample: SinrSample {
            signal,
            i_m,
            i_f,
            sinr,
        },
        serving_uout: None,
        serving_us: Some(us),
        serving_uin: Some(uin),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;
    use crate::sim::geometry::Boundary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_spec(tier: Tier) -> SimSpec {
        SimSpec {
            window_half_width: 500.0,
            snapshots: 1,
            seed: 9,
            tagged_tier: tier,
            boundary: Boundary::Torus,
            full_geometry: false,
        }
    }

    #[test]
    fn choose_bits_counts_and_subsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mask: u64 = rng.random::<u64>() & 0xFFFFF;
            let avail = mask.count_ones();
            let k = rng.random_range(0..=avail.min(12));
            let got = choose_bits(mask, k, &mut rng);
            assert_eq!(got.count_ones(), k.min(avail));
            assert_eq!(got & !mask, 0, "chose bits outside the mask");
        }
    }

    #[test]
    fn occupancy_respects_caps() {
        let cfg = default_config();
        let spec = small_spec(Tier::Femto);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let snap = build_snapshot(&cfg, &spec, &mut rng);
        for i in 0..snap.faps.len() {
            let shared = snap.fap_shared[i];
            let occupied = snap.fap_occupied[i];
            assert_eq!(shared.count_ones(), cfg.m_s);
            let occ_shared = (occupied & shared).count_ones();
            let occ_reserved = (occupied & !shared).count_ones();
            assert_eq!(occ_shared, snap.fap_load_in[i].min(cfg.m_s));
            assert_eq!(occ_reserved, snap.fap_load_s[i].min(cfg.m_r()));
        }
        for (i, &occ) in snap.mbs_occupied.iter().enumerate() {
            assert_eq!(occ.count_ones(), snap.mbs_load[i].min(cfg.m));
        }
    }

    #[test]
    fn closed_access_never_occupies_shared_channels() {
        let mut cfg = default_config();
        cfg.m_s = 0;
        let spec = small_spec(Tier::Femto);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let snap = build_snapshot(&cfg, &spec, &mut rng);
            for i in 0..snap.faps.len() {
                assert_eq!(snap.fap_shared[i], 0);
                assert_eq!(snap.fap_occupied[i] & snap.fap_shared[i], 0);
            }
        }
    }

    #[test]
    fn outside_users_are_conserved() {
        let cfg = default_config();
        let spec = small_spec(Tier::Macro);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let snap = build_snapshot(&cfg, &spec, &mut rng);
        let total: u32 = snap.mbs_load.iter().sum();
        // mean λ_out · (2L)² = 100; a zero draw would be astronomical
        assert!(total > 0);
        assert!(snap.tagged_fap.is_none());
    }

    #[test]
    fn femto_snapshot_adds_tagged_fap_at_center() {
        let cfg = default_config();
        let spec = small_spec(Tier::Femto);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let snap = build_snapshot(&cfg, &spec, &mut rng);
        let idx = snap.tagged_fap.unwrap();
        assert_eq!(snap.faps[idx], Point::ORIGIN);
    }

    #[test]
    fn zero_wall_loss_silences_femto_interference_for_macro_ue() {
        let mut cfg = default_config();
        cfg.w = 0.0;
        cfg.lambda_out = 1e-3; // keep serving cells loaded
        let spec = small_spec(Tier::Macro);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let snap = build_snapshot(&cfg, &spec, &mut rng);
            if let Some(t) = tagged_sinr(&snap, &cfg, &spec, &mut rng) {
                assert_eq!(t.sample.i_f, 0.0);
            }
        }
    }

    #[test]
    fn single_mbs_noise_only_matches_exponential_law() {
        // One MBS at a known distance, no FAPs, noise only: the SINR cdf
        // is 1 − exp(−μ T r^α σ²/P_m).
        let mut cfg = default_config();
        cfg.sigma2 = 1e-8;
        let spec = small_spec(Tier::Macro);
        let r = 120.0;
        let snap = Snapshot {
            mbs: vec![Point { x: r, y: 0.0 }],
            mbs_load: vec![3],
            mbs_occupied: vec![0b111],
            faps: vec![],
            fap_load_s: vec![],
            fap_load_in: vec![],
            fap_shared: vec![],
            fap_occupied: vec![],
            tagged_fap: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 40_000;
        let mut sinrs = Vec::with_capacity(n);
        for _ in 0..n {
            let t = tagged_sinr(&snap, &cfg, &spec, &mut rng).unwrap();
            assert_eq!(t.sample.i_m, 0.0);
            assert_eq!(t.sample.i_f, 0.0);
            sinrs.push(t.sample.sinr);
        }
        sinrs.sort_by(f64::total_cmp);
        for q in [0.25, 0.5, 0.75] {
            let t_q = sinrs[(q * n as f64) as usize];
            let analytic =
                1.0 - (-cfg.mu * t_q * r.powf(cfg.alpha) * cfg.sigma2 / cfg.p_m).exp();
            assert!(
                (analytic - q).abs() < 0.01,
                "quantile {q}: empirical threshold {t_q}, analytic cdf {analytic}"
            );
        }
    }

    #[test]
    fn macro_probe_requires_loaded_cell() {
        let cfg = default_config();
        let spec = small_spec(Tier::Macro);
        let snap = Snapshot {
            mbs: vec![Point { x: 10.0, y: 0.0 }],
            mbs_load: vec![0],
            mbs_occupied: vec![0],
            faps: vec![],
            fap_load_s: vec![],
            fap_load_in: vec![],
            fap_shared: vec![],
            fap_occupied: vec![],
            tagged_fap: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        assert!(tagged_sinr(&snap, &cfg, &spec, &mut rng).is_none());
    }
}
