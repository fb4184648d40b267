//! Fixture tables: submit templates, state-code maps, and command shapes
//! for the built-in dialects. Directive spellings for srun/jsrun-class
//! schedulers follow their public documentation.

use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;

use super::{
    contract_row_parser, DurationFormat, InterimState, SchedulerDialect,
};

fn map(entries: &[(&str, InterimState)]) -> BTreeMap<String, InterimState> {
    entries
        .iter()
        .map(|(code, interim)| (code.to_string(), *interim))
        .collect()
}

pub(crate) fn contract_state_map() -> BTreeMap<String, InterimState> {
    use InterimState::*;
    map(&[
        ("Q", Pending),
        ("R", Running),
        ("CD", Done),
        ("F", FailedLrm),
        ("CA", CanceledLrm),
    ])
}

const SLURM_TEMPLATE: &str = "\
#!/bin/sh
{{#queue}}#SBATCH --partition={{queue}}
{{/queue}}{{#project}}#SBATCH --account={{project}}
{{/project}}{{#reservation}}#SBATCH --reservation={{reservation}}
{{/reservation}}{{#duration}}#SBATCH --time={{duration}}
{{/duration}}{{#node_count}}#SBATCH --nodes={{node_count}}
{{/node_count}}{{#process_count}}#SBATCH --ntasks={{process_count}}
{{/process_count}}{{#processes_per_node}}#SBATCH --ntasks-per-node={{processes_per_node}}
{{/processes_per_node}}{{#cpu_cores_per_process}}#SBATCH --cpus-per-task={{cpu_cores_per_process}}
{{/cpu_cores_per_process}}{{#gpu_cores_per_process}}#SBATCH --gpus-per-task={{gpu_cores_per_process}}
{{/gpu_cores_per_process}}{{#exclusive}}#SBATCH --exclusive
{{/exclusive}}{{#stdout_path}}#SBATCH --output={{stdout_path}}
{{/stdout_path}}{{#stderr_path}}#SBATCH --error={{stderr_path}}
{{/stderr_path}}{{#custom}}#SBATCH --{{key}}={{value}}
{{/custom}}{{#env}}export {{name}}={{value}}
{{/env}}{{#directory}}cd {{directory}} || exit 1
{{/directory}}exec /bin/sh {{launcher_script}}
";

const PBS_TEMPLATE: &str = "\
#!/bin/sh
{{#queue}}#PBS -q {{queue}}
{{/queue}}{{#project}}#PBS -A {{project}}
{{/project}}{{#reservation}}#PBS -W x=FLAGS:ADVRES:{{reservation}}
{{/reservation}}{{#duration}}#PBS -l walltime={{duration}}
{{/duration}}{{#node_count}}#PBS -l nodes={{node_count}}{{#processes_per_node}}:ppn={{processes_per_node}}{{/processes_per_node}}
{{/node_count}}{{#process_count}}#PBS -l procs={{process_count}}
{{/process_count}}{{#cpu_cores_per_process}}#PBS -l ncpus={{cpu_cores_per_process}}
{{/cpu_cores_per_process}}{{#gpu_cores_per_process}}#PBS -l ngpus={{gpu_cores_per_process}}
{{/gpu_cores_per_process}}{{#exclusive}}#PBS -l place=excl
{{/exclusive}}{{#stdout_path}}#PBS -o {{stdout_path}}
{{/stdout_path}}{{#stderr_path}}#PBS -e {{stderr_path}}
{{/stderr_path}}{{#custom}}#PBS -W {{key}}={{value}}
{{/custom}}{{#env}}export {{name}}={{value}}
{{/env}}{{#directory}}cd {{directory}} || exit 1
{{/directory}}exec /bin/sh {{launcher_script}}
";

const LSF_TEMPLATE: &str = "\
#!/bin/sh
{{#queue}}#BSUB -q {{queue}}
{{/queue}}{{#project}}#BSUB -P {{project}}
{{/project}}{{#reservation}}#BSUB -U {{reservation}}
{{/reservation}}{{#duration}}#BSUB -W {{duration}}
{{/duration}}{{#process_count}}#BSUB -n {{process_count}}
{{/process_count}}{{#processes_per_node}}#BSUB -R span[ptile={{processes_per_node}}]
{{/processes_per_node}}{{#exclusive}}#BSUB -x
{{/exclusive}}{{#stdout_path}}#BSUB -o {{stdout_path}}
{{/stdout_path}}{{#stderr_path}}#BSUB -e {{stderr_path}}
{{/stderr_path}}{{#custom}}#BSUB -{{key}} {{value}}
{{/custom}}{{#env}}export {{name}}={{value}}
{{/env}}{{#directory}}cd {{directory}} || exit 1
{{/directory}}exec /bin/sh {{launcher_script}}
";

const MOCK_TEMPLATE: &str = "\
#!/bin/sh
{{#queue}}#MLRM queue={{queue}}
{{/queue}}{{#project}}#MLRM project={{project}}
{{/project}}{{#reservation}}#MLRM reservation={{reservation}}
{{/reservation}}{{#duration}}#MLRM duration={{duration}}
{{/duration}}{{#node_count}}#MLRM node_count={{node_count}}
{{/node_count}}{{#process_count}}#MLRM process_count={{process_count}}
{{/process_count}}{{#processes_per_node}}#MLRM processes_per_node={{processes_per_node}}
{{/processes_per_node}}{{#exclusive}}#MLRM exclusive=true
{{/exclusive}}{{#custom}}#MLRM {{key}}={{value}}
{{/custom}}{{#env}}export {{name}}={{value}}
{{/env}}{{#directory}}cd {{directory}} || exit 1
{{/directory}}exec /bin/sh {{launcher_script}}
";

pub(crate) fn mock_template() -> String {
    MOCK_TEMPLATE.to_string()
}

pub fn slurm_dialect() -> SchedulerDialect {
    use InterimState::*;
    SchedulerDialect {
        name: "slurm".to_string(),
        submit_template: SLURM_TEMPLATE.to_string(),
        submit_command: Box::new(|script| {
            vec![
                "sbatch".to_string(),
                script.to_string_lossy().to_string(),
            ]
        }),
        native_id_pattern: Regex::new(r"Submitted batch job (\d+)").unwrap(),
        status_command: Box::new(|ids| {
            vec![
                "squeue".to_string(),
                "--noheader".to_string(),
                "-o".to_string(),
                "%i %t".to_string(),
                "-j".to_string(),
                ids.join(","),
            ]
        }),
        row_parser: contract_row_parser(),
        state_map: map(&[
            ("PD", Pending),
            ("CF", Pending),
            ("S", Running),
            ("R", Running),
            ("CG", Running),
            ("CD", Done),
            ("F", FailedLrm),
            ("TO", FailedLrm),
            ("NF", FailedLrm),
            ("OOM", FailedLrm),
            ("PR", FailedLrm),
            ("CA", CanceledLrm),
        ]),
        cancel_command: Box::new(|id| {
            vec!["scancel".to_string(), id.to_string()]
        }),
        duration_format: DurationFormat::HoursMinutesSeconds,
    }
}

pub fn pbs_dialect() -> SchedulerDialect {
    use InterimState::*;
    SchedulerDialect {
        name: "pbs".to_string(),
        submit_template: PBS_TEMPLATE.to_string(),
        submit_command: Box::new(|script| {
            vec!["qsub".to_string(), script.to_string_lossy().to_string()]
        }),
        // qsub prints the bare job id on its first line.
        native_id_pattern: Regex::new(r"(\S+)").unwrap(),
        status_command: Box::new(|ids| {
            let mut argv = vec!["qstat".to_string()];
            argv.extend(ids.iter().cloned());
            argv
        }),
        row_parser: Box::new(|line| {
            let trimmed = line.trim_start();
            if trimmed.is_empty()
                || trimmed.starts_with("Job id")
                || trimmed.starts_with("Job ID")
                || trimmed.starts_with('-')
            {
                return None;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            // Default qstat columns: id name user time-use state queue.
            if fields.len() < 5 {
                return None;
            }
            Some((fields[0].to_string(), fields[4].to_string(), None))
        }),
        state_map: map(&[
            ("Q", Pending),
            ("H", Pending),
            ("W", Pending),
            ("T", Pending),
            ("R", Running),
            ("S", Running),
            ("E", Running),
            ("B", Running),
            ("F", Done),
            ("X", Done),
        ]),
        cancel_command: Box::new(|id| vec!["qdel".to_string(), id.to_string()]),
        duration_format: DurationFormat::Seconds,
    }
}

pub fn lsf_dialect() -> SchedulerDialect {
    use InterimState::*;
    SchedulerDialect {
        name: "lsf".to_string(),
        submit_template: LSF_TEMPLATE.to_string(),
        submit_command: Box::new(|script| {
            vec!["bsub".to_string(), script.to_string_lossy().to_string()]
        }),
        native_id_pattern: Regex::new(r"Job <([^>]+)>").unwrap(),
        status_command: Box::new(|ids| {
            let mut argv = vec![
                "bjobs".to_string(),
                "-noheader".to_string(),
                "-o".to_string(),
                "jobid stat".to_string(),
            ];
            argv.extend(ids.iter().cloned());
            argv
        }),
        row_parser: contract_row_parser(),
        state_map: map(&[
            ("PEND", Pending),
            ("PSUSP", Pending),
            ("WAIT", Pending),
            ("PROV", Pending),
            ("RUN", Running),
            ("USUSP", Running),
            ("SSUSP", Running),
            ("DONE", Done),
            ("EXIT", FailedLrm),
        ]),
        cancel_command: Box::new(|id| vec!["bkill".to_string(), id.to_string()]),
        duration_format: DurationFormat::Minutes,
    }
}

/// The mock dialect drives the `mocklrm` helper, which honors the generic
/// command contract with `msub`/`mstat`/`mdel` verbs against a spool
/// directory.
pub fn mock_dialect(program: &[String], spool: &Path) -> SchedulerDialect {
    let spool = spool.to_string_lossy().to_string();
    let submit_base = program.to_vec();
    let status_base = program.to_vec();
    let cancel_base = program.to_vec();
    let spool_submit = spool.clone();
    let spool_status = spool.clone();
    let spool_cancel = spool;
    SchedulerDialect {
        name: "mock".to_string(),
        submit_template: MOCK_TEMPLATE.to_string(),
        submit_command: Box::new(move |script| {
            let mut argv = submit_base.clone();
            argv.extend([
                "--spool".to_string(),
                spool_submit.clone(),
                "msub".to_string(),
                script.to_string_lossy().to_string(),
            ]);
            argv
        }),
        native_id_pattern: Regex::new(r"(\S+)").unwrap(),
        status_command: Box::new(move |ids| {
            let mut argv = status_base.clone();
            argv.extend([
                "--spool".to_string(),
                spool_status.clone(),
                "mstat".to_string(),
            ]);
            argv.extend(ids.iter().cloned());
            argv
        }),
        row_parser: contract_row_parser(),
        state_map: contract_state_map(),
        cancel_command: Box::new(move |id| {
            let mut argv = cancel_base.clone();
            argv.extend([
                "--spool".to_string(),
                spool_cancel.clone(),
                "mdel".to_string(),
                id.to_string(),
            ]);
            argv
        }),
        duration_format: DurationFormat::Seconds,
    }
}
