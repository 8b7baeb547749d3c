// Every runnable example must keep working against the current API.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main().unwrap();
            }
        }
    };
}

example!(plan_deployment);
example!(prefill_ttft_budget);
example!(decode_curve_lookup);
example!(load_sweep);
example!(mm1_validation);
example!(simulated_sweep);
example!(prefix_cache_planning);
example!(service_distribution);
