//! Shared fixtures for the integration tests: the spec corpus used by the
//! golden-script suite and helpers for driving the mock scheduler binary.

use portajob::{JobAttributes, JobSpec, ResourceSpec};

/// Argv of the mock scheduler helper built alongside this crate.
#[allow(dead_code)]
pub fn mocklrm_cmd() -> Vec<String> {
    vec![env!("CARGO_BIN_EXE_mocklrm").to_string()]
}

/// Named specs with fixed, machine-independent paths so rendered scripts
/// are byte-stable.
#[allow(dead_code)]
pub fn corpus() -> Vec<(&'static str, JobSpec)> {
    let mut specs: Vec<(&'static str, JobSpec)> = Vec::new();

    // A 512-process eigenvalue computation driven through srun.
    let mut fig = JobSpec::new("/opt/cps/bin/NOARCH.x");
    fig.arguments = vec![
        "-qmp-geom", "8", "4", "4", "4", "do_arg.vml", "evo_arg.vml",
        "eig_arg.vml", "0.00", "Overlap",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    fig.stdout_path = Some("/work/run/eig.out".into());
    fig.stderr_path = Some("/work/run/eig.err".into());
    fig.resources = ResourceSpec::with_process_count(512);
    fig.launcher = Some("srun".to_string());
    specs.push(("fig-example", fig));

    specs.push(("minimal", JobSpec::new("/bin/date")));

    let mut args_env = JobSpec::new("/usr/bin/env");
    args_env.arguments = vec!["-u".to_string(), "HOME".to_string()];
    args_env
        .environment
        .insert("OMP_NUM_THREADS".to_string(), "4".to_string());
    args_env
        .environment
        .insert("RUN_LABEL".to_string(), "trial 7".to_string());
    specs.push(("args-env", args_env));

    let mut workdir = JobSpec::new("/bin/ls");
    workdir.directory = Some("/data/input set".into());
    workdir.stdout_path = Some("/data/listing.out".into());
    workdir.stderr_path = Some("/data/listing.err".into());
    specs.push(("workdir-streams", workdir));

    let mut resources = JobSpec::new("/opt/app/solver");
    resources.resources = ResourceSpec {
        node_count: Some(4),
        processes_per_node: Some(8),
        cpu_cores_per_process: Some(2),
        gpu_cores_per_process: Some(1),
        exclusive_node_use: true,
        ..Default::default()
    };
    specs.push(("full-resources", resources));

    let mut queued = JobSpec::new("/opt/app/etl");
    queued.attributes = JobAttributes {
        duration: Some(3600),
        queue_name: Some("debug".to_string()),
        project_name: Some("alloc123".to_string()),
        ..Default::default()
    };
    specs.push(("queue-project", queued));

    let mut reserved = JobSpec::new("/opt/app/burst");
    reserved.attributes = JobAttributes {
        duration: Some(90),
        reservation_id: Some("maint-window".to_string()),
        ..Default::default()
    };
    specs.push(("reservation", reserved));

    let mut custom = JobSpec::new("/opt/app/tuned");
    for (key, value) in [
        ("slurm.constraint", "haswell"),
        ("pbs.umask", "022"),
        ("lsf.app", "dockerized"),
        ("mock.flavor", "vanilla"),
    ] {
        custom
            .attributes
            .custom_attributes
            .insert(key.to_string(), value.to_string());
    }
    specs.push(("custom-attrs", custom));

    let mut mpi = JobSpec::new("/opt/app/exchange");
    mpi.arguments = vec!["--steps".to_string(), "100".to_string()];
    mpi.resources = ResourceSpec {
        node_count: Some(2),
        processes_per_node: Some(8),
        ..Default::default()
    };
    mpi.launcher = Some("mpirun".to_string());
    specs.push(("mpirun-multi", mpi));

    let mut hooks = JobSpec::new("/opt/app/staged");
    hooks.pre_launch = Some("/opt/app/stage-in.sh".into());
    hooks.post_launch = Some("/opt/app/stage-out.sh".into());
    hooks.stdout_path = Some("/work/run/both.log".into());
    hooks.stderr_path = Some("/work/run/both.log".into());
    specs.push(("hooks", hooks));

    let mut filtered = JobSpec::new("/usr/bin/sort");
    filtered.stdin_path = Some("/data/unsorted.txt".into());
    filtered.stdout_path = Some("/data/sorted.txt".into());
    filtered.launcher = Some("single".to_string());
    specs.push(("stdin-filter", filtered));

    specs
}
