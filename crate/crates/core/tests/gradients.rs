mod common;

use common::{check_gradients, grad_case, grad_model};
use ltlforge::compnet::Architecture;

#[test]
fn every_architecture_matches_finite_differences() {
    for arch in Architecture::ALL {
        for seed in 0..4 {
            let model = grad_model(arch, 100 + seed);
            let case = grad_case(seed);
            let r = check_gradients(&model, &case);
            assert!(r.checked > 0, "{arch}");
            assert_eq!(r.failures, 0, "{arch} seed {seed}: worst relative error {:.3e}", r.worst_rel);
            assert_eq!(r.unused_nonzero, 0, "{arch} seed {seed}");
        }
    }
}
