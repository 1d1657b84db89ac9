use qrnorm::states::{zoo, ZOO_NAMES};

#[test]
fn zoo_entries_are_states_and_pure_where_declared() {
    for name in ZOO_NAMES {
        let e = zoo(name).unwrap();
        let rho = &e.operator;
        assert!(rho.is_hermitian(), "{name}");
        assert!((rho.trace().re - 1.0).abs() <= 1e-12, "{name}: trace {}", rho.trace());
        assert!(rho.min_eigenvalue().unwrap() >= -1e-12, "{name}");
        let purity = (rho * rho).trace().re;
        if e.ket.is_some() {
            assert!((purity - 1.0).abs() <= 1e-10, "{name}: purity {purity}");
        } else {
            assert!(purity < 1.0 - 1e-6, "{name} declared mixed but purity {purity}");
        }
        assert_eq!(rho.dims().iter().product::<usize>(), rho.rows(), "{name}");
    }
}
