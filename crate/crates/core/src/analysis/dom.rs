use alloc::vec;
use alloc::vec::Vec;

use super::Pos;
use crate::ir::{BlockId, Function};

/// Dominator tree over the reachable blocks of a function, with
/// dominance frontiers and constant-time dominance queries.
#[derive(Clone, Debug)]
pub struct DomTree {
    idom: Vec<Option<BlockId>>,
    children: Vec<Vec<BlockId>>,
    rpo: Vec<BlockId>,
    reachable: Vec<bool>,
    pre: Vec<u32>,
    post: Vec<u32>,
    preorder: Vec<BlockId>,
}

impl DomTree {
    /// Cooper-Harvey-Kennedy iteration over reverse postorder.
    pub fn build(f: &Function) -> DomTree {
        let n = f.blocks.len();
        let entry = f.entry();
        let mut reachable = vec![false; n];
        let mut postorder = Vec::with_capacity(n);
        let mut stack: Vec<(BlockId, usize)> = vec![(entry, 0)];
        reachable[entry.index()] = true;
        while let Some((b, i)) = stack.last_mut() {
            let succs = f.successors(*b);
            if *i < succs.len() {
                let s = succs[*i];
                *i += 1;
                if !reachable[s.index()] {
                    reachable[s.index()] = true;
                    stack.push((s, 0));
                }
            } else {
                postorder.push(*b);
                stack.pop();
            }
        }
        let rpo: Vec<BlockId> = postorder.iter().rev().copied().collect();
        let mut rpo_num = vec![u32::MAX; n];
        for (i, b) in rpo.iter().enumerate() {
            rpo_num[b.index()] = i as u32;
        }
        let preds = f.predecessors();
        let mut idom: Vec<Option<BlockId>> = vec![None; n];
        idom[entry.index()] = Some(entry);
        let mut changed = true;
        while changed {
            changed = false;
            for &b in rpo.iter().skip(1) {
                let mut new_idom: Option<BlockId> = None;
                for &p in &preds[b.index()] {
                    if idom[p.index()].is_none() {
                        continue;
                    }
                    new_idom = Some(match new_idom {
                        None => p,
                        Some(cur) => intersect(&idom, &rpo_num, p, cur),
                    });
                }
                if new_idom.is_some() && idom[b.index()] != new_idom {
                    idom[b.index()] = new_idom;
                    changed = true;
                }
            }
        }
        idom[entry.index()] = None;

        let mut children = vec![Vec::new(); n];
        for b in f.block_ids() {
            if let Some(d) = idom[b.index()] {
                children[d.index()].push(b);
            }
        }
        let mut pre = vec![u32::MAX; n];
        let mut post = vec![u32::MAX; n];
        let mut preorder = Vec::with_capacity(n);
        let mut counter = 0u32;
        let mut stack: Vec<(BlockId, usize)> = vec![(entry, 0)];
        pre[entry.index()] = counter;
        preorder.push(entry);
        counter += 1;
        while let Some((b, i)) = stack.last_mut() {
            let kids = &children[b.index()];
            if *i < kids.len() {
                let c = kids[*i];
                *i += 1;
                pre[c.index()] = counter;
                counter += 1;
                preorder.push(c);
                stack.push((c, 0));
            } else {
                post[b.index()] = counter;
                counter += 1;
                stack.pop();
            }
        }
        DomTree { idom, children, rpo, reachable, pre, post, preorder }
    }

    pub fn idom(&self, b: BlockId) -> Option<BlockId> {
        self.idom[b.index()]
    }

    pub fn children(&self, b: BlockId) -> &[BlockId] {
        &self.children[b.index()]
    }

    pub fn is_reachable(&self, b: BlockId) -> bool {
        self.reachable[b.index()]
    }

    /// Reachable blocks in reverse postorder of the CFG.
    pub fn rpo(&self) -> &[BlockId] {
        &self.rpo
    }

    /// Reachable blocks in preorder of the dominator tree, children visited
    /// in block order.
    pub fn preorder(&self) -> &[BlockId] {
        &self.preorder
    }

    /// Preorder rank of a block in the dominator tree.
    pub fn preorder_index(&self, b: BlockId) -> u32 {
        self.pre[b.index()]
    }

    /// Non-strict block dominance. Unreachable blocks dominate nothing.
    pub fn dominates(&self, a: BlockId, b: BlockId) -> bool {
        if !self.reachable[a.index()] || !self.reachable[b.index()] {
            return false;
        }
        self.pre[a.index()] <= self.pre[b.index()] && self.post[b.index()] <= self.post[a.index()]
    }

    pub fn strictly_dominates(&self, a: BlockId, b: BlockId) -> bool {
        a != b && self.dominates(a, b)
    }

    /// Non-strict dominance between program points.
    pub fn dominates_pos(&self, a: Pos, b: Pos) -> bool {
        if a.block == b.block {
            a.idx <= b.idx && self.reachable[a.block.index()]
        } else {
            self.dominates(a.block, b.block)
        }
    }

    pub fn strictly_dominates_pos(&self, a: Pos, b: Pos) -> bool {
        a != b && self.dominates_pos(a, b)
    }

    /// Dominance frontier of every block.
    pub fn frontiers(&self, f: &Function) -> Vec<Vec<BlockId>> {
        let n = f.blocks.len();
        let mut df: Vec<Vec<BlockId>> = vec![Vec::new(); n];
        let preds = f.predecessors();
        for b in f.block_ids() {
            if !self.reachable[b.index()] {
                continue;
            }
            let ps: Vec<BlockId> = preds[b.index()].iter().copied().filter(|p| self.reachable[p.index()]).collect();
            if ps.len() < 2 {
                continue;
            }
            let Some(stop) = self.idom(b) else { continue };
            for p in ps {
                let mut runner = p;
                while runner != stop {
                    if !df[runner.index()].contains(&b) {
                        df[runner.index()].push(b);
                    }
                    match self.idom(runner) {
                        Some(r) => runner = r,
                        None => break,
                    }
                }
            }
        }
        for list in df.iter_mut() {
            list.sort();
        }
        df
    }
}

fn intersect(idom: &[Option<BlockId>], rpo_num: &[u32], mut a: BlockId, mut b: BlockId) -> BlockId {
    while a != b {
        while rpo_num[a.index()] > rpo_num[b.index()] {
            a = idom[a.index()].unwrap();
        }
        while rpo_num[b.index()] > rpo_num[a.index()] {
            b = idom[b.index()].unwrap();
        }
    }
    a
}
