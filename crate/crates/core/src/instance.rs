//! Domain types: instances, matchings, allocations, feasible pairs, and the
//! canonical JSON file formats.
//!
//! Identifiers are strings in the file format; internally every entity gets a
//! dense index assigned in declaration order, so tie-breaking everywhere else
//! in the crate is reproducible. Preference lists are explicit and strict:
//! anything unlisted is unacceptable. The unmatched outcome is represented by
//! absence from the assignment map, never by a sentinel project.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SprError};

/// Instance document exactly as it appears on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInstance {
    pub students: Vec<RawAgent>,
    pub projects: Vec<RawAgent>,
    pub resources: Vec<RawResource>,
}

/// A student or project: an id plus its strict preference list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAgent {
    pub id: String,
    pub prefs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawResource {
    pub id: String,
    pub capacity: u64,
    pub compatible: Vec<String>,
}

/// Matching document: partial map student id → project id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMatching {
    pub assignment: BTreeMap<String, String>,
}

/// Allocation document: total map resource id → project id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAllocation {
    pub placement: BTreeMap<String, String>,
}

/// Combined matching + allocation document, as emitted by the solvers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawFeasiblePair {
    pub assignment: BTreeMap<String, String>,
    pub placement: BTreeMap<String, String>,
}

/// A validated instance with dense indices and rank tables.
///
/// All types in this module are immutable after construction and safe to
/// share across threads.
#[derive(Debug, Clone)]
pub struct SprInstance {
    raw: RawInstance,
    student_prefs: Vec<Vec<usize>>,
    project_prefs: Vec<Vec<usize>>,
    /// student_rank[s][p] = position of p in s's list, if listed.
    student_rank: Vec<Vec<Option<u32>>>,
    /// project_rank[p][s] = position of s in p's list, if listed.
    project_rank: Vec<Vec<Option<u32>>>,
    resource_caps: Vec<u64>,
    /// Compatible projects per resource, sorted by project index.
    resource_compat: Vec<Vec<usize>>,
    student_index: HashMap<String, usize>,
    project_index: HashMap<String, usize>,
    resource_index: HashMap<String, usize>,
}

impl SprInstance {
    /// Validates a raw instance, reporting every violated invariant at once.
    pub fn validate(raw: RawInstance) -> Result<Self> {
        let mut issues = Vec::new();

        let student_index = index_ids(raw.students.iter().map(|a| &a.id), "student", &mut issues);
        let project_index = index_ids(raw.projects.iter().map(|a| &a.id), "project", &mut issues);
        let resource_index = index_ids(raw.resources.iter().map(|r| &r.id), "resource", &mut issues);

        let mut student_prefs = Vec::with_capacity(raw.students.len());
        for s in &raw.students {
            student_prefs.push(resolve_list(
                &s.prefs,
                &project_index,
                &format!("student {}", s.id),
                "project",
                &mut issues,
            ));
        }
        let mut project_prefs = Vec::with_capacity(raw.projects.len());
        for p in &raw.projects {
            project_prefs.push(resolve_list(
                &p.prefs,
                &student_index,
                &format!("project {}", p.id),
                "student",
                &mut issues,
            ));
        }

        let mut resource_caps = Vec::with_capacity(raw.resources.len());
        let mut resource_compat = Vec::with_capacity(raw.resources.len());
        for r in &raw.resources {
            if r.capacity == 0 {
                issues.push(format!("resource {}: capacity must be positive", r.id));
            }
            resource_caps.push(r.capacity);
            let mut compat = resolve_list(
                &r.compatible,
                &project_index,
                &format!("resource {}", r.id),
                "project",
                &mut issues,
            );
            if r.compatible.is_empty() {
                issues.push(format!("resource {}: compatible set must be nonempty", r.id));
            }
            compat.sort_unstable();
            resource_compat.push(compat);
        }

        if !issues.is_empty() {
            return Err(SprError::Validation(issues));
        }

        let student_rank = rank_table(&student_prefs, raw.projects.len());
        let project_rank = rank_table(&project_prefs, raw.students.len());

        Ok(SprInstance {
            raw,
            student_prefs,
            project_prefs,
            student_rank,
            project_rank,
            resource_caps,
            resource_compat,
            student_index,
            project_index,
            resource_index,
        })
    }

    /// Parses and validates an instance from its canonical JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawInstance =
            serde_json::from_str(text).map_err(|e| SprError::Parse(e.to_string()))?;
        Self::validate(raw)
    }

    /// Canonical serialization; `from_json ∘ to_json` is the identity and
    /// `to_json ∘ from_json` is byte-exact on canonical documents.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.raw).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn raw(&self) -> &RawInstance {
        &self.raw
    }

    pub fn n_students(&self) -> usize {
        self.raw.students.len()
    }

    pub fn n_projects(&self) -> usize {
        self.raw.projects.len()
    }

    pub fn n_resources(&self) -> usize {
        self.raw.resources.len()
    }

    pub fn student_id(&self, s: usize) -> &str {
        &self.raw.students[s].id
    }

    pub fn project_id(&self, p: usize) -> &str {
        &self.raw.projects[p].id
    }

    pub fn resource_id(&self, r: usize) -> &str {
        &self.raw.resources[r].id
    }

    pub fn student_index(&self, id: &str) -> Option<usize> {
        self.student_index.get(id).copied()
    }

    pub fn project_index(&self, id: &str) -> Option<usize> {
        self.project_index.get(id).copied()
    }

    pub fn resource_index(&self, id: &str) -> Option<usize> {
        self.resource_index.get(id).copied()
    }

    /// Projects acceptable to student `s`, most preferred first.
    pub fn student_prefs(&self, s: usize) -> &[usize] {
        &self.student_prefs[s]
    }

    /// Students acceptable to project `p`, most preferred first.
    pub fn project_prefs(&self, p: usize) -> &[usize] {
        &self.project_prefs[p]
    }

    pub fn capacity(&self, r: usize) -> u64 {
        self.resource_caps[r]
    }

    /// Compatible projects of resource `r`, sorted by project index.
    pub fn compatible(&self, r: usize) -> &[usize] {
        &self.resource_compat[r]
    }

    /// Rank of `p` in `s`'s list (0 = most preferred), `None` if unacceptable.
    pub fn student_rank(&self, s: usize, p: usize) -> Option<u32> {
        self.student_rank[s][p]
    }

    pub fn project_rank(&self, p: usize, s: usize) -> Option<u32> {
        self.project_rank[p][s]
    }

    /// Does student `s` strictly prefer `p` to outcome `current`?
    /// The unmatched outcome ranks below every acceptable project.
    pub fn student_prefers(&self, s: usize, p: usize, current: Option<usize>) -> bool {
        match (self.student_rank[s][p], current) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(rp), Some(q)) => match self.student_rank[s][q] {
                None => true,
                Some(rq) => rp < rq,
            },
        }
    }

    /// Does project `p` strictly prefer student `s` to student `t`?
    pub fn project_prefers(&self, p: usize, s: usize, t: usize) -> bool {
        match (self.project_rank[p][s], self.project_rank[p][t]) {
            (Some(rs), Some(rt)) => rs < rt,
            (Some(_), None) => true,
            _ => false,
        }
    }

    /// Converts a raw matching document, checking that every pair is an
    /// acceptable contract for both sides.
    pub fn matching_from_raw(&self, raw: &RawMatching) -> Result<Matching> {
        let mut assigned = vec![None; self.n_students()];
        for (sid, pid) in &raw.assignment {
            let s = self
                .student_index(sid)
                .ok_or_else(|| SprError::Contract(format!("unknown student id {sid}")))?;
            let p = self
                .project_index(pid)
                .ok_or_else(|| SprError::Contract(format!("unknown project id {pid}")))?;
            if self.student_rank[s][p].is_none() {
                return Err(SprError::Contract(format!(
                    "student {sid} does not rank project {pid}"
                )));
            }
            if self.project_rank[p][s].is_none() {
                return Err(SprError::Contract(format!(
                    "project {pid} does not rank student {sid}"
                )));
            }
            assigned[s] = Some(p);
        }
        Ok(Matching { assigned })
    }

    pub fn matching_to_raw(&self, m: &Matching) -> RawMatching {
        let mut assignment = BTreeMap::new();
        for (s, p) in m.iter_assigned() {
            assignment.insert(self.student_id(s).to_owned(), self.project_id(p).to_owned());
        }
        RawMatching { assignment }
    }

    pub fn allocation_from_raw(&self, raw: &RawAllocation) -> Result<Allocation> {
        let mut placement = vec![usize::MAX; self.n_resources()];
        for (rid, pid) in &raw.placement {
            let r = self
                .resource_index(rid)
                .ok_or_else(|| SprError::Contract(format!("unknown resource id {rid}")))?;
            let p = self
                .project_index(pid)
                .ok_or_else(|| SprError::Contract(format!("unknown project id {pid}")))?;
            if !self.resource_compat[r].contains(&p) {
                return Err(SprError::Contract(format!(
                    "resource {rid} is not compatible with project {pid}"
                )));
            }
            placement[r] = p;
        }
        if let Some(r) = placement.iter().position(|&p| p == usize::MAX) {
            return Err(SprError::Contract(format!(
                "allocation must be total: resource {} is unplaced",
                self.resource_id(r)
            )));
        }
        Ok(Allocation { placement })
    }

    pub fn allocation_to_raw(&self, a: &Allocation) -> RawAllocation {
        let mut placement = BTreeMap::new();
        for (r, &p) in a.placement.iter().enumerate() {
            placement.insert(self.resource_id(r).to_owned(), self.project_id(p).to_owned());
        }
        RawAllocation { placement }
    }
}

fn index_ids<'a>(
    ids: impl Iterator<Item = &'a String>,
    kind: &str,
    issues: &mut Vec<String>,
) -> HashMap<String, usize> {
    let mut map = HashMap::new();
    for (i, id) in ids.enumerate() {
        if map.insert(id.clone(), i).is_some() {
            issues.push(format!("duplicate {kind} id {id}"));
        }
    }
    map
}

fn resolve_list(
    ids: &[String],
    index: &HashMap<String, usize>,
    owner: &str,
    kind: &str,
    issues: &mut Vec<String>,
) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        match index.get(id) {
            None => issues.push(format!("{owner}: unknown {kind} id {id}")),
            Some(&i) => {
                if !seen.insert(i) {
                    issues.push(format!("{owner}: duplicate entry {id}"));
                } else {
                    out.push(i);
                }
            }
        }
    }
    out
}

fn rank_table(prefs: &[Vec<usize>], width: usize) -> Vec<Vec<Option<u32>>> {
    prefs
        .iter()
        .map(|list| {
            let mut row = vec![None; width];
            for (rank, &x) in list.iter().enumerate() {
                row[x] = Some(rank as u32);
            }
            row
        })
        .collect()
}

/// The set X of acceptable contracts: (s, p) is in X iff p ranks s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractSet {
    contracts: BTreeSet<(usize, usize)>,
}

impl ContractSet {
    pub fn len(&self) -> usize {
        self.contracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contracts.is_empty()
    }

    pub fn contains(&self, s: usize, p: usize) -> bool {
        self.contracts.contains(&(s, p))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.contracts.iter().copied()
    }
}

/// X = { (s, p) : s appears in p's preference list }.
pub fn acceptable_contracts(inst: &SprInstance) -> ContractSet {
    let mut contracts = BTreeSet::new();
    for p in 0..inst.n_projects() {
        for &s in inst.project_prefs(p) {
            contracts.insert((s, p));
        }
    }
    ContractSet { contracts }
}

/// A matching: each student is assigned to at most one acceptable project.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    assigned: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(inst: &SprInstance) -> Self {
        Matching {
            assigned: vec![None; inst.n_students()],
        }
    }

    pub fn from_assignments(inst: &SprInstance, pairs: &[(usize, usize)]) -> Self {
        let mut m = Self::empty(inst);
        for &(s, p) in pairs {
            m.assigned[s] = Some(p);
        }
        m
    }

    pub fn project_of(&self, s: usize) -> Option<usize> {
        self.assigned[s]
    }

    pub fn assign(&mut self, s: usize, p: usize) {
        self.assigned[s] = Some(p);
    }

    pub fn unassign(&mut self, s: usize) {
        self.assigned[s] = None;
    }

    pub fn matched_count(&self) -> usize {
        self.assigned.iter().filter(|a| a.is_some()).count()
    }

    pub fn iter_assigned(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assigned
            .iter()
            .enumerate()
            .filter_map(|(s, a)| a.map(|p| (s, p)))
    }

    /// Students assigned to project `p`.
    pub fn students_of(&self, p: usize) -> Vec<usize> {
        self.iter_assigned()
            .filter_map(|(s, q)| (q == p).then_some(s))
            .collect()
    }
}

/// κ_p = |Y(p)|: the seat demand each project needs covered.
pub fn required_capacity(inst: &SprInstance, y: &Matching) -> Vec<u64> {
    let mut kappa = vec![0u64; inst.n_projects()];
    for (_, p) in y.iter_assigned() {
        kappa[p] += 1;
    }
    kappa
}

/// A total placement of resources onto compatible projects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    placement: Vec<usize>,
}

impl Allocation {
    /// Builds an allocation, checking compatibility of every placement.
    pub fn new(inst: &SprInstance, placement: Vec<usize>) -> Result<Self> {
        if placement.len() != inst.n_resources() {
            return Err(SprError::Contract(format!(
                "allocation must place all {} resources",
                inst.n_resources()
            )));
        }
        for (r, &p) in placement.iter().enumerate() {
            if !inst.compatible(r).contains(&p) {
                return Err(SprError::Contract(format!(
                    "resource {} is not compatible with project {}",
                    inst.resource_id(r),
                    inst.project_id(p)
                )));
            }
        }
        Ok(Allocation { placement })
    }

    pub(crate) fn new_unchecked(placement: Vec<usize>) -> Self {
        Allocation { placement }
    }

    pub fn project_of(&self, r: usize) -> usize {
        self.placement[r]
    }

    pub fn placements(&self) -> &[usize] {
        &self.placement
    }

    /// q_μ(p) = Σ_{r : μ(r) = p} q_r, zero for projects receiving nothing.
    pub fn induced_capacities(&self, inst: &SprInstance) -> Vec<u64> {
        let mut caps = vec![0u64; inst.n_projects()];
        for (r, &p) in self.placement.iter().enumerate() {
            caps[p] += inst.capacity(r);
        }
        caps
    }

    /// Resource indices placed on project `p`.
    pub fn resources_of(&self, p: usize) -> Vec<usize> {
        self.placement
            .iter()
            .enumerate()
            .filter_map(|(r, &q)| (q == p).then_some(r))
            .collect()
    }
}

/// A matching together with an allocation that accommodates it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasiblePair {
    pub matching: Matching,
    pub allocation: Allocation,
}

impl FeasiblePair {
    /// Checks |Y(p)| ≤ q_μ(p) for every project.
    pub fn new(inst: &SprInstance, matching: Matching, allocation: Allocation) -> Result<Self> {
        let kappa = required_capacity(inst, &matching);
        let caps = allocation.induced_capacities(inst);
        for p in 0..inst.n_projects() {
            if kappa[p] > caps[p] {
                return Err(SprError::Contract(format!(
                    "infeasible pair: project {} hosts {} students but is allocated capacity {}",
                    inst.project_id(p),
                    kappa[p],
                    caps[p]
                )));
            }
        }
        Ok(FeasiblePair { matching, allocation })
    }

    pub fn to_raw(&self, inst: &SprInstance) -> RawFeasiblePair {
        RawFeasiblePair {
            assignment: inst.matching_to_raw(&self.matching).assignment,
            placement: inst.allocation_to_raw(&self.allocation).placement,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::example1;

    fn raw_with(capacity: u64, pref: &str) -> RawInstance {
        RawInstance {
            students: vec![RawAgent {
                id: "s1".into(),
                prefs: vec![pref.into()],
            }],
            projects: vec![RawAgent {
                id: "p1".into(),
                prefs: vec!["s1".into()],
            }],
            resources: vec![RawResource {
                id: "r1".into(),
                capacity,
                compatible: vec!["p1".into()],
            }],
        }
    }

    #[test]
    fn example1_is_valid() {
        let inst = example1();
        assert_eq!(inst.n_students(), 2);
        assert_eq!(inst.n_projects(), 2);
        assert_eq!(inst.n_resources(), 1);
        assert_eq!(inst.capacity(0), 1);
        assert_eq!(inst.compatible(0), &[0, 1]);
    }

    #[test]
    fn zero_capacity_is_reported() {
        let err = SprInstance::validate(raw_with(0, "p1")).unwrap_err();
        match err {
            SprError::Validation(issues) => {
                assert!(issues.iter().any(|m| m.contains("capacity must be positive")));
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn undeclared_project_is_named() {
        let err = SprInstance::validate(raw_with(1, "p_missing")).unwrap_err();
        match err {
            SprError::Validation(issues) => {
                assert!(issues.iter().any(|m| m.contains("p_missing")));
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn duplicate_pref_entries_are_reported() {
        let mut raw = raw_with(1, "p1");
        raw.students[0].prefs.push("p1".into());
        let err = SprInstance::validate(raw).unwrap_err();
        match err {
            SprError::Validation(issues) => {
                assert!(issues.iter().any(|m| m.contains("duplicate entry p1")));
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn example1_has_four_contracts() {
        let inst = example1();
        let x = acceptable_contracts(&inst);
        assert_eq!(x.len(), 4);
        for s in 0..2 {
            for p in 0..2 {
                assert!(x.contains(s, p));
            }
        }
    }

    #[test]
    fn empty_project_list_contributes_no_contracts() {
        let mut raw = raw_with(1, "p1");
        raw.projects[0].prefs.clear();
        let inst = SprInstance::validate(raw).unwrap();
        assert!(acceptable_contracts(&inst).is_empty());
    }

    #[test]
    fn contracts_grow_by_one_per_listed_student() {
        let inst = example1();
        let before = acceptable_contracts(&inst).len();
        let mut raw = inst.raw().clone();
        raw.students.push(RawAgent {
            id: "s_new".into(),
            prefs: vec![],
        });
        raw.projects[0].prefs.push("s_new".into());
        let bigger = SprInstance::validate(raw).unwrap();
        assert_eq!(acceptable_contracts(&bigger).len(), before + 1);
    }

    #[test]
    fn required_capacity_counts_assignments() {
        let inst = example1();
        let empty = Matching::empty(&inst);
        assert_eq!(required_capacity(&inst, &empty), vec![0, 0]);

        let y = Matching::from_assignments(&inst, &[(0, 0)]);
        assert_eq!(required_capacity(&inst, &y), vec![1, 0]);
    }

    #[test]
    fn required_capacity_sums_to_matched_students() {
        let inst = example1();
        let y = Matching::from_assignments(&inst, &[(0, 0), (1, 0)]);
        let kappa = required_capacity(&inst, &y);
        assert_eq!(kappa.iter().sum::<u64>() as usize, y.matched_count());
    }

    #[test]
    fn canonical_round_trip_is_bit_exact() {
        let inst = example1();
        let text = inst.to_json();
        let reparsed = SprInstance::from_json(&text).unwrap();
        assert_eq!(reparsed.raw(), inst.raw());
        assert_eq!(reparsed.to_json(), text);
    }

    #[test]
    fn infeasible_pair_is_rejected() {
        let inst = example1();
        let y = Matching::from_assignments(&inst, &[(0, 0), (1, 0)]);
        let mu = Allocation::new(&inst, vec![0]).unwrap();
        assert!(FeasiblePair::new(&inst, y, mu).is_err());
    }

    #[test]
    fn matching_from_raw_checks_acceptability() {
        let mut raw = raw_with(1, "p1");
        raw.projects[0].prefs.clear(); // p1 ranks nobody
        let inst = SprInstance::validate(raw).unwrap();
        let m = RawMatching {
            assignment: [("s1".to_string(), "p1".to_string())].into_iter().collect(),
        };
        assert!(inst.matching_from_raw(&m).is_err());
    }
}
