/// Edit script between two key sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Op {
    Equal(usize, usize),
    Delete(usize),
    Insert(usize),
}

/// Above this many DP cells the unmatched middle is reported as delete + insert.
const MAX_CELLS: usize = 16 << 20;

/// Longest-common-subsequence alignment, deletions before insertions within a gap.
pub(crate) fn align<T: PartialEq>(a: &[T], b: &[T]) -> Vec<Op> {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..]
        .iter()
        .rev()
        .zip(b[prefix..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (ma, mb) = (&a[prefix..a.len() - suffix], &b[prefix..b.len() - suffix]);

    let mut ops: Vec<Op> = (0..prefix).map(|i| Op::Equal(i, i)).collect();
    if ma.len().saturating_mul(mb.len()) > MAX_CELLS {
        ops.extend((0..ma.len()).map(|i| Op::Delete(prefix + i)));
        ops.extend((0..mb.len()).map(|j| Op::Insert(prefix + j)));
    } else {
        let (n, m) = (ma.len(), mb.len());
        // table[i][j] = LCS length of ma[i..] and mb[j..]
        let mut table = vec![0u32; (n + 1) * (m + 1)];
        let at = |i: usize, j: usize| i * (m + 1) + j;
        for i in (0..n).rev() {
            for j in (0..m).rev() {
                table[at(i, j)] = if ma[i] == mb[j] {
                    table[at(i + 1, j + 1)] + 1
                } else {
                    table[at(i + 1, j)].max(table[at(i, j + 1)])
                };
            }
        }
        let (mut i, mut j) = (0, 0);
        let mut inserts = Vec::new();
        while i < n || j < m {
            if i < n && j < m && ma[i] == mb[j] {
                ops.append(&mut inserts);
                ops.push(Op::Equal(prefix + i, prefix + j));
                i += 1;
                j += 1;
            } else if j >= m || (i < n && table[at(i + 1, j)] >= table[at(i, j + 1)]) {
                ops.push(Op::Delete(prefix + i));
                i += 1;
            } else {
                inserts.push(Op::Insert(prefix + j));
                j += 1;
            }
        }
        ops.append(&mut inserts);
    }
    let (sa, sb) = (a.len() - suffix, b.len() - suffix);
    ops.extend((0..suffix).map(|k| Op::Equal(sa + k, sb + k)));
    ops
}
