int a[10][10];
int main(void) {
    for (int i = 0; i < 10; i++) {
        for (int j = 0; j < 10; j++) {
            for (int k = 0; k < 3; k++)
                a[i][j] += k;
        }
    }
    for (int n = 0; n < 5; n++) a[n][n] = 0;
    return 0;
}
