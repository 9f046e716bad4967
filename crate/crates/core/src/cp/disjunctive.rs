//! Overload checking and edge finding for one machine, using a Θ-Λ tree over
//! tasks ordered by earliest start.

use crate::instance::Time;

const NEG_INF: Time = Time::MIN / 4;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    sum_p: Time,
    ect: Time,
    sum_p_gray: Time,
    ect_gray: Time,
    /// Gray task behind `sum_p_gray` / `ect_gray`, or `NONE`.
    resp_p: usize,
    resp_ect: usize,
}

const EMPTY: Node = Node {
    sum_p: 0,
    ect: NEG_INF,
    sum_p_gray: 0,
    ect_gray: NEG_INF,
    resp_p: NONE,
    resp_ect: NONE,
};

fn combine(l: &Node, r: &Node) -> Node {
    let sum_p = l.sum_p + r.sum_p;
    let ect = r.ect.max(l.ect + r.sum_p);
    let (sum_p_gray, resp_p) = if l.sum_p_gray + r.sum_p >= l.sum_p + r.sum_p_gray {
        (l.sum_p_gray + r.sum_p, l.resp_p)
    } else {
        (l.sum_p + r.sum_p_gray, r.resp_p)
    };
    let mut ect_gray = r.ect_gray;
    let mut resp_ect = r.resp_ect;
    if l.ect + r.sum_p_gray > ect_gray {
        ect_gray = l.ect + r.sum_p_gray;
        resp_ect = r.resp_p;
    }
    if l.ect_gray + r.sum_p > ect_gray {
        ect_gray = l.ect_gray + r.sum_p;
        resp_ect = l.resp_ect;
    }
    Node {
        sum_p,
        ect,
        sum_p_gray,
        ect_gray,
        resp_p,
        resp_ect,
    }
}

/// Array-backed complete binary tree; leaf `k` holds the task of rank `k` in
/// earliest-start order.
struct ThetaLambdaTree {
    nodes: Vec<Node>,
    leaves: usize,
}

impl ThetaLambdaTree {
    fn new(n: usize) -> Self {
        let leaves = n.next_power_of_two().max(1);
        Self {
            nodes: vec![EMPTY; 2 * leaves],
            leaves,
        }
    }

    fn set(&mut self, slot: usize, node: Node) {
        let mut k = slot + self.leaves;
        self.nodes[k] = node;
        while k > 1 {
            k /= 2;
            self.nodes[k] = combine(&self.nodes[2 * k], &self.nodes[2 * k + 1]);
        }
    }

    fn root(&self) -> &Node {
        &self.nodes[1]
    }
}

/// A task on one machine: earliest start, latest completion, duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Task {
    pub est: Time,
    pub lct: Time,
    pub p: Time,
}

/// Scratch buffers reused across calls.
#[derive(Debug, Default, Clone)]
pub(crate) struct EdgeFinder {
    by_est: Vec<usize>,
    slot: Vec<usize>,
    by_lct: Vec<usize>,
}

impl EdgeFinder {
    /// Writes improved earliest starts into `est_out` (initialised from
    /// `tasks`). Returns false if the tasks cannot all fit.
    pub fn run(&mut self, tasks: &[Task], est_out: &mut [Time]) -> bool {
        let n = tasks.len();
        for (o, t) in est_out.iter_mut().zip(tasks) {
            *o = t.est;
        }
        if n < 2 {
            return tasks.iter().all(|t| t.est + t.p <= t.lct);
        }
        self.by_est.clear();
        self.by_est.extend(0..n);
        self.by_est.sort_by_key(|&i| tasks[i].est);
        self.slot.resize(n, 0);
        for (k, &i) in self.by_est.iter().enumerate() {
            self.slot[i] = k;
        }
        self.by_lct.clear();
        self.by_lct.extend(0..n);
        self.by_lct
            .sort_by_key(|&i| std::cmp::Reverse(tasks[i].lct));

        let mut tree = ThetaLambdaTree::new(n);
        for (i, t) in tasks.iter().enumerate() {
            tree.set(
                self.slot[i],
                Node {
                    sum_p: t.p,
                    ect: t.est + t.p,
                    sum_p_gray: t.p,
                    ect_gray: t.est + t.p,
                    resp_p: NONE,
                    resp_ect: NONE,
                },
            );
        }
        if tree.root().ect > tasks[self.by_lct[0]].lct {
            return false;
        }
        for k in 1..n {
            let j = self.by_lct[k - 1];
            let t = tasks[j];
            tree.set(
                self.slot[j],
                Node {
                    sum_p: 0,
                    ect: NEG_INF,
                    sum_p_gray: t.p,
                    ect_gray: t.est + t.p,
                    resp_p: j,
                    resp_ect: j,
                },
            );
            let lct = tasks[self.by_lct[k]].lct;
            if tree.root().ect > lct {
                return false;
            }
            while tree.root().ect_gray > lct {
                let i = tree.root().resp_ect;
                debug_assert_ne!(i, NONE);
                est_out[i] = est_out[i].max(tree.root().ect);
                tree.set(self.slot[i], EMPTY);
            }
        }
        true
    }
}
