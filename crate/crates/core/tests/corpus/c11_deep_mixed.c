extern int __VERIFIER_nondet_int(void);
void f(int n) {
    for (int i = 0; i < n; i++) {
        while (i < n) {
            do {
                if (__VERIFIER_nondet_int()) {
                    if (i % 2) {
                        i++;
                    }
                } else {
                    n--;
                }
            } while (n > 3);
        }
    }
}
int main(void) { f(__VERIFIER_nondet_int()); return 0; }
