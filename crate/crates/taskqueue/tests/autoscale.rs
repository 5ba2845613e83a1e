use payroll_taskqueue::{Autoscaler, ScalingPolicy};
use proptest::prelude::*;

fn policy() -> ScalingPolicy {
    ScalingPolicy { min_workers: 1, max_workers: 4, high_watermark: 10, low_watermark: 2, cooldown_ticks: 5 }
}

fn trace(depths: &[usize], start: usize) -> Vec<usize> {
    let mut a = Autoscaler::new(policy()).unwrap();
    let mut w = start;
    depths
        .iter()
        .map(|&d| {
            w = a.tick(d, w);
            w
        })
        .collect()
}

#[test]
fn floor_at_min() {
    assert_eq!(trace(&[0; 12], 1), vec![1; 12]);
}

#[test]
fn high_depth_scales_up_and_caps() {
    assert_eq!(trace(&[50; 6], 2), vec![3, 4, 4, 4, 4, 4]);
}

#[test]
fn sustained_idle_scales_down_after_cooldown() {
    assert_eq!(trace(&[0; 5], 4), vec![4, 4, 4, 4, 3]);
    assert_eq!(trace(&[0; 10], 4), vec![4, 4, 4, 4, 3, 3, 3, 3, 3, 2]);
}

#[test]
fn mixed_script() {
    let depths = [12, 12, 5, 1, 1, 1, 1, 1, 11, 0, 0, 0, 0, 0];
    assert_eq!(trace(&depths, 1), vec![2, 3, 3, 3, 3, 3, 3, 2, 3, 3, 3, 3, 3, 2]);
}

proptest! {
    #[test]
    fn workers_stay_in_bounds(
        min in 1usize..4, span in 0usize..4, low in 0usize..10, gap in 1usize..10, cooldown in 1u32..6,
        start in 0usize..12, depths in proptest::collection::vec(0usize..40, 0..100),
    ) {
        let p = ScalingPolicy {
            min_workers: min, max_workers: min + span,
            high_watermark: low + gap, low_watermark: low, cooldown_ticks: cooldown,
        };
        let mut a = Autoscaler::new(p).unwrap();
        let mut w = start;
        for d in depths {
            let next = a.tick(d, w);
            prop_assert!(next >= p.min_workers && next <= p.max_workers);
            w = next;
        }
    }
}
