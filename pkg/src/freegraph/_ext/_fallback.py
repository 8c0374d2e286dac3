"""Pure-Python interval DP for loop-word traces.

Same recursion as the compiled kernel; written against generic numbers so
the exact (Fraction) mode can reuse it.
"""


def loop_trace(word, src, tgt, opp, mu, inv_sqrt_st):
    """Trace of X_{w0} ... X_{w(n-1)}; ``word`` must be a composable path, n >= 1."""
    n = len(word)
    if n == 0 or n % 2:
        return 0 * mu[0]
    w = [int(x) for x in word]
    if src[w[0]] != tgt[w[-1]]:
        return 0 * mu[0]
    # T[i][j] = trace of w[i:j]; T[i][i] is the empty loop at s(w[i])
    T = [[None] * (n + 1) for _ in range(n + 1)]
    for i in range(n):
        T[i][i] = mu[src[w[i]]]
    for L in range(2, n + 1, 2):
        for i in range(n - L + 1):
            j = i + L
            e = w[j - 1]
            if src[w[i]] != tgt[e]:
                T[i][j] = 0 * mu[0]
                continue
            partner = opp[e]
            acc = 0 * mu[0]
            Ti = T[i]
            for k in range(i, j - 1, 2):
                if w[k] == partner:
                    acc += Ti[k] * T[k + 1][j - 1]
            T[i][j] = acc * inv_sqrt_st[e]
    return T[0][n]


def loop_trace_batch(words, src, tgt, opp, mu, inv_sqrt_st):
    return [loop_trace(w, src, tgt, opp, mu, inv_sqrt_st) for w in words]
