use super::report::{ActionReason, Explanation, MainStatus, ServedIntention};
use super::CompletedCycle;

pub(super) fn explain(agent: &str, last: &CompletedCycle) -> Explanation {
    let mut text = Vec::new();
    match (last.main, last.proof.first()) {
        (MainStatus::Succeeded, Some(root)) => {
            text.push("main proved:".to_string());
            text.extend(root.to_string().lines().map(|l| format!("  {l}")));
        }
        (MainStatus::Succeeded, None) => text.push("main proved".to_string()),
        (MainStatus::Failed, _) if last.intentions.is_empty() => text.push("main unprovable, no intentions".to_string()),
        (MainStatus::Failed, _) => text.push("main unprovable".to_string()),
    }
    for b in &last.blocked {
        match &b.clause {
            Some(rule) => text.push(format!("blocked {} in rule {rule}", b.literal())),
            None => text.push(format!("blocked {} in the goal", b.literal())),
        }
    }
    for i in &last.intentions {
        text.push(format!("intention {} ({})", i.describe(), i.origin));
    }

    let mut actions = Vec::new();
    for name in &last.selection.direct {
        text.push(format!("{name} selected directly: proven as a subgoal of main"));
        actions.push(ActionReason { action: name.clone(), direct: true, serves: Vec::new() });
    }
    for name in &last.selection.solved {
        let served: Vec<ServedIntention> = last
            .intentions
            .iter()
            .filter(|i| last.selection.explanation.get(name).is_some_and(|s| s.contains(&i.describe())))
            .map(|i| ServedIntention { intention: i.describe(), origin: i.origin.to_string() })
            .collect();
        let because: Vec<String> =
            served.iter().map(|s| format!("intention {} ({})", s.intention, s.origin)).collect();
        text.push(format!("{name} selected because {}", because.join(" and ")));
        match actions.iter_mut().find(|a: &&mut ActionReason| &a.action == name) {
            Some(a) => a.serves = served,
            None => actions.push(ActionReason { action: name.clone(), direct: false, serves: served }),
        }
    }
    if last.selection.solved.is_empty() && !last.intentions.is_empty() {
        text.push("no action serves the current intentions".to_string());
    }
    Explanation {
        agent: agent.to_string(),
        tick: last.tick,
        main: last.main,
        proof: last.proof.clone(),
        blocked: last.blocked.clone(),
        intentions: last.intentions.clone(),
        actions,
        text,
    }
}
