"""Independent reference implementations used only by the tests.

Written node-by-node with plain Python so they share no code path with the
vectorized library versions.
"""
import math


def counts(pred, labels, sensitive):
    c = {}
    for p, y, s in zip(pred, labels, sensitive):
        key = (int(p), int(y), int(s))
        c[key] = c.get(key, 0) + 1
    return c


def f1(pred, labels):
    tp = fp = fn = 0
    for p, y in zip(pred, labels):
        if p == 1 and y == 1:
            tp += 1
        elif p == 1 and y == 0:
            fp += 1
        elif p == 0 and y == 1:
            fn += 1
    if tp == 0:
        return 0.0
    prec = tp / (tp + fp)
    rec = tp / (tp + fn)
    return 100.0 * 2 * prec * rec / (prec + rec)


def statistical_parity(pred, sensitive):
    pos = [0, 0]
    tot = [0, 0]
    for p, s in zip(pred, sensitive):
        tot[s] += 1
        pos[s] += p == 1
    if 0 in tot:
        return None
    return 100.0 * abs(pos[1] / tot[1] - pos[0] / tot[0])


def equal_opportunity(pred, labels, sensitive):
    hit = [0, 0]
    tot = [0, 0]
    for p, y, s in zip(pred, labels, sensitive):
        if y == 1:
            tot[s] += 1
            hit[s] += p == 1
    if 0 in tot:
        return None
    return 100.0 * abs(hit[1] / tot[1] - hit[0] / tot[0])


def kl_trapezoid(mu, log_var, width=20.0, points=100_000):
    """KL(N(mu, exp(log_var)) || N(0,1)) by the trapezoid rule on
    mu +- width standard deviations."""
    sd = math.exp(0.5 * log_var)
    lo, hi = mu - width * sd, mu + width * sd
    h = (hi - lo) / (points - 1)
    total = 0.0
    for k in range(points):
        z = lo + k * h
        logp = -0.5 * ((z - mu) / sd) ** 2 - math.log(sd) - 0.5 * math.log(2 * math.pi)
        logq = -0.5 * z * z - 0.5 * math.log(2 * math.pi)
        w = 0.5 if k in (0, points - 1) else 1.0
        total += w * math.exp(logp) * (logp - logq)
    return total * h


def dense_gcn_probs(x, edges, n, enc_weights, dec_w, dec_b, hidden):
    """Deterministic GCN classifier written out with lists: per layer
    D^-1/2 (A+I) D^-1/2 X W, keep the mean half, then softmax(Z W + b)."""
    adj = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    for i, j in edges:
        if i != j:
            adj[i][j] = adj[j][i] = 1.0
    deg = [sum(row) for row in adj]
    norm = [[adj[i][j] / math.sqrt(deg[i] * deg[j]) for j in range(n)] for i in range(n)]
    h = [list(r) for r in x]
    for w in enc_weights:
        xw = [[sum(h[i][k] * w[k][c] for k in range(len(w))) for c in range(len(w[0]))] for i in range(n)]
        agg = [[sum(norm[i][j] * xw[j][c] for j in range(n)) for c in range(len(xw[0]))] for i in range(n)]
        h = [row[:hidden] for row in agg]
    out = []
    for row in h:
        logits = [sum(row[k] * dec_w[k][c] for k in range(hidden)) + dec_b[c] for c in range(len(dec_b))]
        m = max(logits)
        e = [math.exp(v - m) for v in logits]
        out.append([v / sum(e) for v in e])
    return out
