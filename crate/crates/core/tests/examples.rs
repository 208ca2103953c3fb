macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(chain_pull, "chain_pull.rs", chain_pull_runs);
example!(leg_ik, "leg_ik.rs", leg_ik_runs);
example!(retarget, "retarget.rs", retarget_runs);
example!(attach_release, "attach_release.rs", attach_release_runs);
example!(gait_cycles, "gait_cycles.rs", gait_cycles_runs);
example!(group_comparison, "group_comparison.rs", group_comparison_runs);
