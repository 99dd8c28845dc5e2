import { defineConfig } from 'vitest/config';

export default defineConfig({
    server: {
        proxy: {
            // the console only ever talks to the planning service API
            '/scenario': 'http://127.0.0.1:8000',
            '/health': 'http://127.0.0.1:8000',
        },
    },
    test: {
        environment: 'jsdom',
        include: ['tests/**/*.test.ts'],
        setupFiles: ['tests/setup.ts'],
        testTimeout: 120000,
        hookTimeout: 120000,
    },
});
