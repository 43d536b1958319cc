extern int __VERIFIER_nondet_int(void);
extern _Bool __VERIFIER_nondet_bool(void);
int main(void) {
    int s = 0;
    while (__VERIFIER_nondet_bool()) {
        s += __VERIFIER_nondet_int();
    }
    if (__VERIFIER_nondet_int() > 3) {
        s = 0;
    }
    for (;;) {
        if (s > 5) { break; } else { s++; }
    }
    return s;
}
